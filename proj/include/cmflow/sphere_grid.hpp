#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cmflow {

enum class GridVariant { FullS2, Axisym };

std::string to_string(GridVariant v);
GridVariant parse_grid_variant(const std::string& name);

/// Number of stencil points on each side of a node for latitude differences.
inline constexpr int kStencilHalfWidth = 3;

/// One entry of a latitude stencil. `ring` is always a valid ring index; when
/// the stencil crosses a pole the sample is taken on the far side of the pole,
/// i.e. longitude shifted by pi on the full sphere.
struct StencilTap {
    int ring = 0;
    bool shifted = false;
    double d1 = 0.0;
    double d2 = 0.0;
};

using LatitudeStencil = std::array<StencilTap, 2 * kStencilHalfWidth + 1>;

class RingTransform;

/**
 * Tensor-product discretization of the unit sphere.
 *
 * FullS2: Gauss-Legendre latitudes (nodes in cos(theta)) times a uniform
 * longitude ring with an even number of points. Nodes are stored
 * latitude-major: index = ring * n_phi + column, rings ordered from the north
 * pole (theta ascending).
 *
 * Axisym: one node per latitude of S^n, Gauss-Gegenbauer in cos(theta) with
 * weight (1 - x^2)^{(n-2)/2}. Weights carry the |S^{n-1}| factor so that they
 * sum to |S^n|. The node count must be even so the grid is antipodally
 * symmetric.
 *
 * Grids are immutable once built and shared via shared_ptr<const SphereGrid>.
 */
class SphereGrid {
public:
    struct Resolution {
        int n_theta = 0;
        int n_phi = 1;
    };

    static std::shared_ptr<const SphereGrid> build(GridVariant variant, int n_dim, Resolution res);
    static std::shared_ptr<const SphereGrid> full_s2(int n_theta, int n_phi);
    static std::shared_ptr<const SphereGrid> axisym(int n_dim, int n_theta);

    /// Fault-injection hook: a copy of this grid with every weight scaled.
    std::shared_ptr<const SphereGrid> with_scaled_weights(double factor) const;

    ~SphereGrid();
    SphereGrid(const SphereGrid&) = delete;
    SphereGrid& operator=(const SphereGrid&) = delete;

    GridVariant variant() const { return variant_; }
    int n_dim() const { return n_dim_; }
    int n_theta() const { return n_theta_; }
    int n_phi() const { return n_phi_; }
    std::size_t size() const { return weights_.size(); }

    int ring_of(std::size_t node) const { return static_cast<int>(node / static_cast<std::size_t>(n_phi_)); }
    int column_of(std::size_t node) const { return static_cast<int>(node % static_cast<std::size_t>(n_phi_)); }
    std::size_t node(int ring, int column) const {
        return static_cast<std::size_t>(ring) * static_cast<std::size_t>(n_phi_) + static_cast<std::size_t>(column);
    }

    std::span<const double> theta() const { return theta_; }
    std::span<const double> phi() const { return phi_; }
    std::span<const double> sin_theta() const { return sin_theta_; }
    std::span<const double> cot_theta() const { return cot_theta_; }
    std::span<const double> weights() const { return weights_; }
    std::span<const std::size_t> antipode() const { return antipode_; }

    double node_theta(std::size_t node) const { return theta_[static_cast<std::size_t>(ring_of(node))]; }
    double node_phi(std::size_t node) const { return phi_[static_cast<std::size_t>(column_of(node))]; }

    /// Unit vector of a node in R^3 (FullS2) or the meridian-plane vector
    /// (sin theta, 0, ..., 0, cos theta) in R^{n+1} (Axisym).
    std::vector<double> direction(std::size_t node) const;

    /// Analytic |S^n|.
    double area() const { return area_; }

    const LatitudeStencil& stencil(int ring) const { return stencils_[static_cast<std::size_t>(ring)]; }

    /// Highest longitudinal mode kept by the polar filter on a ring.
    int filter_cutoff(int ring) const { return filter_cutoff_[static_cast<std::size_t>(ring)]; }

    const RingTransform& rings() const { return *rings_; }

private:
    SphereGrid() = default;

    GridVariant variant_ = GridVariant::FullS2;
    int n_dim_ = 2;
    int n_theta_ = 0;
    int n_phi_ = 1;
    double area_ = 0.0;
    std::vector<double> theta_, phi_, sin_theta_, cot_theta_, weights_;
    std::vector<std::size_t> antipode_;
    std::vector<LatitudeStencil> stencils_;
    std::vector<int> filter_cutoff_;
    std::unique_ptr<RingTransform> rings_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

/// Samples of u (or psi) on a SphereGrid, one value per node.
class SupportField {
public:
    SupportField() = default;
    SupportField(GridPtr grid, std::vector<double> values);
    /// Constant field.
    SupportField(GridPtr grid, double value);

    const SphereGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& values_mut() { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    double min() const;
    double max() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Evaluates `f(theta, phi)` at every node (phi is 0 on Axisym grids).
template <typename F>
SupportField sample(const GridPtr& grid, F&& f) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid->node_theta(i), grid->node_phi(i));
    return SupportField(grid, std::move(v));
}

/// Sum of values * weights using pairwise summation in a fixed order.
double quadrature(const SphereGrid& grid, std::span<const double> values);
double quadrature(const SupportField& field);

/// Pairwise (tree) sum in fixed order; the building block of all reductions.
double pairwise_sum(std::span<const double> values);

/// Finite-difference weights (Fornberg) for derivatives 0..max_order at x0.
/// Result is indexed [order][point].
std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> x, int max_order);

/// Per-node symmetric 2x2 matrix in the orthonormal frame (e_theta, e_phi).
struct Sym2 {
    double a = 0.0;  // (1,1)
    double b = 0.0;  // (1,2)
    double c = 0.0;  // (2,2)
};

/// Partial derivatives in (theta, phi) on a FullS2 grid.
struct S2Derivatives {
    std::vector<double> u_t, u_tt, u_p, u_pp, u_tp;
};

S2Derivatives derivatives_s2(const SupportField& field);

/// Covariant Hessian of a field on S^2 in the orthonormal frame.
std::vector<Sym2> covariant_hessian_s2(const SupportField& field);
std::vector<Sym2> covariant_hessian_s2(const SupportField& field, const S2Derivatives& d);

/// theta-derivatives of an axisymmetric field.
struct AxisymDerivatives {
    std::vector<double> d1, d2;
};

AxisymDerivatives derivatives_axisym(const SupportField& field);

/// Eigenvalues of W_u = Hess u + u g for an axisymmetric field: the radial
/// radius u'' + u (multiplicity 1) and the tangential one cot(theta) u' + u
/// (multiplicity n - 1).
struct AxisymRadii {
    std::vector<double> radial, tangential;
};

AxisymRadii radii_eigen_axisym(const SupportField& field);

/// Components of the tangential gradient in the (e_theta, e_phi) frame. The
/// phi component is identically zero on Axisym grids.
struct TangentGradient {
    std::vector<double> g_theta, g_phi;
};

TangentGradient gradient(const SupportField& field);

/// Antipodal average. The result is exactly even.
SupportField symmetrize_even(const SupportField& field);
void symmetrize_even_inplace(const SphereGrid& grid, std::span<double> values);

/// max_i |f[i] - f[antipode[i]]|
double antipodal_defect(const SupportField& field);

/// Removes longitudinal modes above the ring cutoff (FullS2 only; identity on
/// Axisym grids). Keeps the explicit time step independent of the clustering
/// of longitude nodes near the poles.
void polar_filter(const SphereGrid& grid, std::span<double> values);

/// Reads one value per node, latitude-major, one number per line.
SupportField load_field(const GridPtr& grid, const std::string& path);
void save_field(const SupportField& field, const std::string& path);

}  // namespace cmflow
