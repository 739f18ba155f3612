#pragma once

// Backend tables compiled in separate translation units with their own ISA
// flags. These TUs must not instantiate std:: templates: an inline function
// emitted with AVX2 codegen could be picked by the linker for the whole
// program.

#include "blockformer/tensor/kernels.hpp"

namespace blockformer::kernels::detail {

#if defined(BLOCKFORMER_HAVE_AVX2_KERNELS)
extern const KernelSet kAvx2Kernels;
#endif
#if defined(BLOCKFORMER_HAVE_NEON_KERNELS)
extern const KernelSet kNeonKernels;
#endif

}  // namespace blockformer::kernels::detail
