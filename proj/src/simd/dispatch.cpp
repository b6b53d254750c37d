#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace scalign::simd {

const char* to_string(Level level) {
    switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
    }
    return "unknown";
}

const Kernels* avx2_kernels() {
#if defined(SCALIGN_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const Kernels& choose() {
    const char* env = std::getenv("SCALIGN_SIMD");
    const std::string_view request = env != nullptr ? env : "";
    if (request == "scalar") {
        return scalar_kernels();
    }
    if (const Kernels* avx2 = avx2_kernels(); avx2 != nullptr) {
        return *avx2;
    }
    return scalar_kernels();
}

} // namespace

const Kernels& active() {
    static const Kernels& table = choose();
    return table;
}

} // namespace scalign::simd
