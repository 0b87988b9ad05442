#pragma once

// Float and double builds of the numeric code live in distinct inline
// namespaces so both libraries can be linked into one program.
#ifdef TEMPO_DOUBLE_PRECISION
#define TEMPO_PRECISION_NS f64
#else
#define TEMPO_PRECISION_NS f32
#endif
