#pragma once

#include "cmflow/sphere_grid.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace cmflow {

/// Binomial coefficient C(n, k) as a double (0 outside 0 <= k <= n).
double binomial(int n, int k);

/// Elementary symmetric polynomial sigma_k of an explicit eigenvalue list.
/// sigma_0 = 1; sigma_k = 0 for k > size.
double elementary_symmetric(std::span<const double> lambda, int k);

/**
 * Principal radii of curvature, i.e. the eigenvalues of W_u = Hess u + u g,
 * stored per node as two arrays.
 *
 * FullS2: `lambda_1`, `lambda_2` are the two eigenvalues (lambda_1 >= lambda_2).
 * Axisym: `lambda_1` is the radial radius (multiplicity 1) and `lambda_2` the
 * tangential one (multiplicity n - 1).
 */
struct RadiiSpectrum {
    GridVariant variant = GridVariant::FullS2;
    int n_dim = 2;
    std::vector<double> lambda_1;
    std::vector<double> lambda_2;

    std::size_t size() const { return lambda_1.size(); }
    /// The full list of n eigenvalues at a node (multiplicities expanded).
    std::vector<double> eigenvalues(std::size_t node) const;
};

/// sigma_k per node for a two-value spectrum with multiplicity (1, n - 1) on
/// Axisym, or the plain pair on FullS2. Inlined for the flow's inner loop.
inline double sigma_k_pair(GridVariant variant, int n_dim, double l1, double l2, int k) {
    if (variant == GridVariant::FullS2) return k == 1 ? l1 + l2 : l1 * l2;
    double t = 1.0;
    for (int i = 0; i < k - 1; ++i) t *= l2;
    return binomial(n_dim - 1, k) * t * l2 + binomial(n_dim - 1, k - 1) * l1 * t;
}

std::vector<double> sigma_k(const RadiiSpectrum& spectrum, int k);

/// d sigma_k / d lambda_i, n entries per node (row-major, node-major).
struct SigmaGradient {
    int n_dim = 0;
    std::vector<double> data;
    std::span<const double> at(std::size_t node) const {
        return std::span<const double>(data).subspan(node * static_cast<std::size_t>(n_dim), static_cast<std::size_t>(n_dim));
    }
};

SigmaGradient sigma_k_gradient(const RadiiSpectrum& spectrum, int k);

/// d sigma_k / d lambda_i = sigma_{k-1}(lambda | i) for an explicit list.
std::vector<double> sigma_k_gradient(std::span<const double> lambda, int k);

RadiiSpectrum radii_spectrum(const SupportField& u);

/// Global minimum principal radius; negative when W_u is indefinite somewhere.
double min_radius(const RadiiSpectrum& spectrum);
double min_radius(const SupportField& u);

/// sigma_i > 0 for i = 1..k at every node.
bool in_garding_cone(const RadiiSpectrum& spectrum, int k);

/// Hypersurface recovered from its support function: X = u x + grad u.
struct EmbeddedBody {
    int ambient_dim = 3;
    std::vector<double> position;  // ambient_dim entries per node
    std::vector<double> rho;       // |X|
    std::span<const double> at(std::size_t node) const {
        return std::span<const double>(position).subspan(node * static_cast<std::size_t>(ambient_dim), static_cast<std::size_t>(ambient_dim));
    }
};

EmbeddedBody embed(const SupportField& u);

/// Integral of u sigma_k(W_u): the (unnormalized) mixed volume V_{k+1}(u, ..., u).
double mixed_volume_k1(const SupportField& u, int k);

struct MixedVolumes {
    double v_u;  // V(v, u, ..., u)
    double v_v;  // V(v, v, u, ..., u)
    double u_u;  // V(u, ..., u)

    /// (V(v,u..)^2 - V(v,v,u..) V(u..)) / V(v,u..)^2, nonnegative by Aleksandrov-Fenchel.
    double relative_gap() const;
};

/// Mixed volumes with one or two slots replaced by W_v, using the normalized
/// polarization of sigma_k. Requires W_u in the Garding cone Gamma_k.
MixedVolumes polarized_mixed_volume(const SupportField& v, const SupportField& u, int k);

/// |int u sigma_k - (k+1)/(n-k) int sigma_{k+1}| / int u sigma_k, for k <= n-1.
double minkowski_formula_check(const SupportField& u, int k);

/// Mesh export of an embedded FullS2 body.
///
/// Vertex order is latitude-major: vertex `ring * n_phi + column + 1` (OBJ is
/// 1-based) is the grid node (ring, column). Faces are two triangles per grid
/// cell between adjacent rings, wrapping in longitude, plus one n_phi-gon
/// closing each polar cap (ring 0 and ring n_theta - 1).
void write_obj(const EmbeddedBody& body, const SphereGrid& grid, std::ostream& out);
void write_ply(const EmbeddedBody& body, const SphereGrid& grid, std::ostream& out);

}  // namespace cmflow
