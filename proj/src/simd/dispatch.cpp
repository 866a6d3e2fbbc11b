#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ssepld/simd/kernels.hpp"

namespace ssepld::simd {

#if defined(SSEPLD_HAVE_AVX2)
namespace detail {
extern const KernelTable kAvx2Table;
}
#endif

namespace {

bool host_has_avx2() {
#if defined(SSEPLD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* pick_default() {
    if (const char* env = std::getenv("SSEPLD_SIMD")) {
        if (std::string(env) == "scalar") return &scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{pick_default()};
    return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(SSEPLD_HAVE_AVX2)
    static const bool ok = host_has_avx2();
    return ok ? &detail::kAvx2Table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void force_isa(Isa isa) {
    if (isa == Isa::Scalar) {
        current().store(&scalar_kernels(), std::memory_order_release);
        return;
    }
    const KernelTable* t = avx2_kernels();
    if (t == nullptr) throw std::runtime_error("AVX2 kernels are not available on this host");
    current().store(t, std::memory_order_release);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace ssepld::simd
