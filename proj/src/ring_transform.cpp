#include "ring_transform.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace cmflow {

namespace {

// The FFTW planner is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

RingTransform::RingTransform(int n_rings, int n_phi) : n_rings_(n_rings), n_phi_(n_phi) {
    std::vector<double> real(static_cast<std::size_t>(n_rings) * static_cast<std::size_t>(n_phi));
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(n_rings) * static_cast<std::size_t>(n_modes()));
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    const int n = n_phi;
    const int modes = n_modes();
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

    std::lock_guard lock(planner_mutex());
    forward_plan_ = fftw_plan_many_dft_r2c(1, &n, n_rings, real.data(), nullptr, 1, n, cplx, nullptr, 1, modes, flags);
    backward_plan_ = fftw_plan_many_dft_c2r(1, &n, n_rings, cplx, nullptr, 1, modes, real.data(), nullptr, 1, n, flags);
    if (forward_plan_ == nullptr || backward_plan_ == nullptr) throw std::runtime_error("FFTW planning failed");
}

RingTransform::~RingTransform() {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    if (backward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void RingTransform::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    // r2c does not write its input.
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void RingTransform::backward(std::span<const std::complex<double>> in, std::span<double> out) const {
    std::vector<std::complex<double>> scratch(in.begin(), in.end());
    fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_plan_), reinterpret_cast<fftw_complex*>(scratch.data()),
                         out.data());
    const double scale = 1.0 / n_phi_;
    std::transform(out.begin(), out.end(), out.begin(), [scale](double v) { return v * scale; });
}

}  // namespace cmflow
