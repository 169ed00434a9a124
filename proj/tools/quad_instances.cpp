#include "quad.hpp"

#include "calculus_impl.hpp"
#include "matcore_impl.hpp"

namespace jdiag {

using cli::ComplexQuad;
using cli::Quad;

JDIAG_INSTANTIATE_MATCORE(Quad)
JDIAG_INSTANTIATE_MATCORE(ComplexQuad)
JDIAG_INSTANTIATE_CALCULUS(Quad)
JDIAG_INSTANTIATE_CALCULUS(ComplexQuad)

}  // namespace jdiag
