try:
    from ._tempo import Model, consensus_from_ranks, generate_dataset, kendall_tau, order_by_value
except ImportError:
    from _tempo import Model, consensus_from_ranks, generate_dataset, kendall_tau, order_by_value

__all__ = ["Model", "consensus_from_ranks", "generate_dataset", "kendall_tau", "order_by_value"]
