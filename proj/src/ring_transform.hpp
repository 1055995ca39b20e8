#pragma once

#include <complex>
#include <span>
#include <vector>

namespace cmflow {

/// Batched real FFTs along every longitude ring of a FullS2 grid.
/// Plans are built once; execution is reentrant.
class RingTransform {
public:
    RingTransform(int n_rings, int n_phi);
    ~RingTransform();
    RingTransform(const RingTransform&) = delete;
    RingTransform& operator=(const RingTransform&) = delete;

    int n_rings() const { return n_rings_; }
    int n_phi() const { return n_phi_; }
    int n_modes() const { return n_phi_ / 2 + 1; }

    /// Unnormalized forward transform of all rings; `out` has n_rings * n_modes entries.
    void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
    /// Inverse transform including the 1/n_phi factor. `in` is left untouched.
    void backward(std::span<const std::complex<double>> in, std::span<double> out) const;

private:
    int n_rings_;
    int n_phi_;
    void* forward_plan_ = nullptr;
    void* backward_plan_ = nullptr;
};

}  // namespace cmflow
