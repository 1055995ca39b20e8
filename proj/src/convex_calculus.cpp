#include "cmflow/convex_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cmflow {

namespace {

void check_k(int k, int n) {
    if (k < 1 || k > n) {
        std::ostringstream msg;
        msg << "sigma_k: k = " << k << " outside 1.." << n;
        throw std::invalid_argument(msg.str());
    }
}

// sigma_m of lambda with the entries in `skip` removed.
double sigma_without(std::span<const double> lambda, int m, std::size_t skip_a, std::size_t skip_b = static_cast<std::size_t>(-1)) {
    std::vector<double> rest;
    rest.reserve(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i)
        if (i != skip_a && i != skip_b) rest.push_back(lambda[i]);
    return elementary_symmetric(rest, m);
}

std::vector<Sym2> radii_matrices_s2(const SupportField& u) {
    auto w = covariant_hessian_s2(u);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i].a += u[i];
        w[i].c += u[i];
    }
    return w;
}

}  // namespace

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

double elementary_symmetric(std::span<const double> lambda, int k) {
    if (k < 0) return 0.0;
    if (k == 0) return 1.0;
    if (static_cast<std::size_t>(k) > lambda.size()) return 0.0;
    // e[j] holds sigma_j of the prefix processed so far.
    std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
    e[0] = 1.0;
    for (double l : lambda)
        for (std::size_t j = static_cast<std::size_t>(k); j >= 1; --j) e[j] += l * e[j - 1];
    return e[static_cast<std::size_t>(k)];
}

std::vector<double> RadiiSpectrum::eigenvalues(std::size_t node) const {
    if (variant == GridVariant::FullS2) return {lambda_1[node], lambda_2[node]};
    std::vector<double> l(static_cast<std::size_t>(n_dim), lambda_2[node]);
    l[0] = lambda_1[node];
    return l;
}

std::vector<double> sigma_k(const RadiiSpectrum& spectrum, int k) {
    check_k(k, spectrum.n_dim);
    std::vector<double> out(spectrum.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = sigma_k_pair(spectrum.variant, spectrum.n_dim, spectrum.lambda_1[i], spectrum.lambda_2[i], k);
    return out;
}

std::vector<double> sigma_k_gradient(std::span<const double> lambda, int k) {
    check_k(k, static_cast<int>(lambda.size()));
    std::vector<double> g(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) g[i] = sigma_without(lambda, k - 1, i);
    return g;
}

SigmaGradient sigma_k_gradient(const RadiiSpectrum& spectrum, int k) {
    const int n = spectrum.n_dim;
    check_k(k, n);
    SigmaGradient out;
    out.n_dim = n;
    out.data.resize(spectrum.size() * static_cast<std::size_t>(n));
    for (std::size_t node = 0; node < spectrum.size(); ++node) {
        double* row = out.data.data() + node * static_cast<std::size_t>(n);
        const double l1 = spectrum.lambda_1[node];
        const double l2 = spectrum.lambda_2[node];
        if (spectrum.variant == GridVariant::FullS2) {
            row[0] = k == 1 ? 1.0 : l2;
            row[1] = k == 1 ? 1.0 : l1;
            continue;
        }
        // Radial slot: sigma_{k-1} of (n-1) copies of l2.
        row[0] = binomial(n - 1, k - 1) * std::pow(l2, k - 1);
        // One tangential copy: sigma_{k-1}(l1, l2 x (n-2)).
        const double tang = binomial(n - 2, k - 1) * std::pow(l2, k - 1) + (k >= 2 ? binomial(n - 2, k - 2) * l1 * std::pow(l2, k - 2) : 0.0);
        for (int i = 1; i < n; ++i) row[i] = tang;
    }
    return out;
}

RadiiSpectrum radii_spectrum(const SupportField& u) {
    const SphereGrid& g = u.grid();
    RadiiSpectrum s;
    s.variant = g.variant();
    s.n_dim = g.n_dim();
    if (g.variant() == GridVariant::Axisym) {
        AxisymRadii r = radii_eigen_axisym(u);
        s.lambda_1 = std::move(r.radial);
        s.lambda_2 = std::move(r.tangential);
        return s;
    }
    const auto w = radii_matrices_s2(u);
    s.lambda_1.resize(w.size());
    s.lambda_2.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double mean = 0.5 * (w[i].a + w[i].c);
        const double disc = std::hypot(0.5 * (w[i].a - w[i].c), w[i].b);
        s.lambda_1[i] = mean + disc;
        s.lambda_2[i] = mean - disc;
    }
    return s;
}

double min_radius(const RadiiSpectrum& spectrum) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spectrum.size(); ++i) m = std::min({m, spectrum.lambda_1[i], spectrum.lambda_2[i]});
    return m;
}

double min_radius(const SupportField& u) { return min_radius(radii_spectrum(u)); }

bool in_garding_cone(const RadiiSpectrum& spectrum, int k) {
    check_k(k, spectrum.n_dim);
    for (std::size_t i = 0; i < spectrum.size(); ++i)
        for (int j = 1; j <= k; ++j)
            if (!(sigma_k_pair(spectrum.variant, spectrum.n_dim, spectrum.lambda_1[i], spectrum.lambda_2[i], j) > 0.0)) return false;
    return true;
}

EmbeddedBody embed(const SupportField& u) {
    const SphereGrid& g = u.grid();
    const double lmin = min_radius(u);
    if (!(lmin > 0.0)) {
        std::ostringstream msg;
        msg << "embed: support function is not uniformly convex (min radius " << lmin << ")";
        throw std::domain_error(msg.str());
    }
    const TangentGradient grad = gradient(u);
    EmbeddedBody body;
    body.ambient_dim = g.n_dim() + 1;
    const std::size_t dim = static_cast<std::size_t>(body.ambient_dim);
    body.position.assign(g.size() * dim, 0.0);
    body.rho.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const std::size_t r = static_cast<std::size_t>(g.ring_of(k));
        const double st = g.sin_theta()[r];
        const double ct = st * g.cot_theta()[r];
        double* X = body.position.data() + k * dim;
        if (g.variant() == GridVariant::FullS2) {
            const double ph = g.node_phi(k);
            const double cp = std::cos(ph);
            const double sp = std::sin(ph);
            const double gt = grad.g_theta[k];
            const double gp = grad.g_phi[k];
            X[0] = u[k] * st * cp + gt * ct * cp - gp * sp;
            X[1] = u[k] * st * sp + gt * ct * sp + gp * cp;
            X[2] = u[k] * ct - gt * st;
        } else {
            X[0] = u[k] * st + grad.g_theta[k] * ct;
            X[dim - 1] = u[k] * ct - grad.g_theta[k] * st;
        }
        double rho2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) rho2 += X[d] * X[d];
        body.rho[k] = std::sqrt(rho2);
        const double expect = u[k] * u[k] + grad.g_theta[k] * grad.g_theta[k] + grad.g_phi[k] * grad.g_phi[k];
        if (std::abs(rho2 - expect) > 1e-12 * std::max(1.0, expect))
            throw std::logic_error("embed: rho^2 != u^2 + |grad u|^2");
    }
    return body;
}

double mixed_volume_k1(const SupportField& u, int k) {
    const auto s = sigma_k(radii_spectrum(u), k);
    std::vector<double> integrand(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) integrand[i] = u[i] * s[i];
    return quadrature(u.grid(), integrand);
}

double MixedVolumes::relative_gap() const { return (v_u * v_u - v_v * u_u) / (v_u * v_u); }

MixedVolumes polarized_mixed_volume(const SupportField& v, const SupportField& u, int k) {
    const SphereGrid& g = u.grid();
    if (&v.grid() != &g) throw std::invalid_argument("polarized_mixed_volume: fields on different grids");
    const int n = g.n_dim();
    check_k(k, n);
    const RadiiSpectrum su = radii_spectrum(u);
    if (!in_garding_cone(su, k)) throw std::domain_error("polarized_mixed_volume: W_u is not in the Garding cone");

    std::vector<double> f1(g.size()), f2(g.size()), f0(g.size());
    if (g.variant() == GridVariant::FullS2) {
        const auto A = radii_matrices_s2(u);
        const auto B = radii_matrices_s2(v);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double trA = A[i].a + A[i].c;
            const double trB = B[i].a + B[i].c;
            if (k == 1) {
                f1[i] = v[i] * trA;
                f2[i] = v[i] * trB;
                f0[i] = u[i] * trA;
            } else {
                const double detA = A[i].a * A[i].c - A[i].b * A[i].b;
                const double trAB = A[i].a * B[i].a + 2.0 * A[i].b * B[i].b + A[i].c * B[i].c;
                f1[i] = v[i] * detA;
                f2[i] = v[i] * 0.5 * (trA * trB - trAB);
                f0[i] = u[i] * detA;
            }
        }
    } else {
        // W_u and W_v share the eigenframe of an axisymmetric field, so the
        // polarization reduces to the diagonal formulas.
        const RadiiSpectrum sv = radii_spectrum(v);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto a = su.eigenvalues(i);
            const auto b = sv.eigenvalues(i);
            const double sk = elementary_symmetric(a, k);
            double mixed2 = 0.0;
            if (k == 1) {
                for (double x : b) mixed2 += x;
            } else {
                for (std::size_t p = 0; p < a.size(); ++p)
                    for (std::size_t q = 0; q < a.size(); ++q)
                        if (p != q) mixed2 += b[p] * b[q] * sigma_without(a, k - 2, p, q);
                mixed2 /= static_cast<double>(k) * (k - 1);
            }
            f1[i] = v[i] * sk;
            f2[i] = v[i] * mixed2;
            f0[i] = u[i] * sk;
        }
    }
    return MixedVolumes{quadrature(g, f1), quadrature(g, f2), quadrature(g, f0)};
}

double minkowski_formula_check(const SupportField& u, int k) {
    const int n = u.grid().n_dim();
    if (k < 1 || k > n - 1) throw std::invalid_argument("minkowski_formula_check requires 1 <= k <= n-1");
    const RadiiSpectrum s = radii_spectrum(u);
    const auto sk = sigma_k(s, k);
    const auto sk1 = sigma_k(s, k + 1);
    std::vector<double> lhs(sk.size());
    for (std::size_t i = 0; i < sk.size(); ++i) lhs[i] = u[i] * sk[i];
    const double a = quadrature(u.grid(), lhs);
    const double b = static_cast<double>(k + 1) / (n - k) * quadrature(u.grid(), sk1);
    return std::abs(a - b) / std::abs(a);
}

namespace {

void require_mesh(const EmbeddedBody& body, const SphereGrid& grid) {
    if (grid.variant() != GridVariant::FullS2) throw std::invalid_argument("mesh export requires a FullS2 grid");
    if (body.rho.size() != grid.size()) throw std::invalid_argument("mesh export: body does not match grid");
}

template <typename Emit>
void for_each_face(const SphereGrid& g, Emit&& emit) {
    const int nt = g.n_theta();
    const int np = g.n_phi();
    for (int i = 0; i + 1 < nt; ++i)
        for (int j = 0; j < np; ++j) {
            const int jn = (j + 1) % np;
            const std::size_t a = g.node(i, j), b = g.node(i, jn), c = g.node(i + 1, jn), d = g.node(i + 1, j);
            emit(std::vector<std::size_t>{a, d, c});
            emit(std::vector<std::size_t>{a, c, b});
        }
    std::vector<std::size_t> north, south;
    for (int j = 0; j < np; ++j) north.push_back(g.node(0, j));
    for (int j = np - 1; j >= 0; --j) south.push_back(g.node(nt - 1, j));
    emit(north);
    emit(south);
}

}  // namespace

void write_obj(const EmbeddedBody& body, const SphereGrid& grid, std::ostream& out) {
    require_mesh(body, grid);
    out.precision(17);
    out << "# support-function body, " << grid.n_theta() << "x" << grid.n_phi() << " latitude-major\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto X = body.at(k);
        out << "v " << X[0] << ' ' << X[1] << ' ' << X[2] << '\n';
    }
    for_each_face(grid, [&](const std::vector<std::size_t>& f) {
        out << 'f';
        for (std::size_t idx : f) out << ' ' << idx + 1;
        out << '\n';
    });
}

void write_ply(const EmbeddedBody& body, const SphereGrid& grid, std::ostream& out) {
    require_mesh(body, grid);
    const std::size_t faces = 2 * static_cast<std::size_t>(grid.n_theta() - 1) * static_cast<std::size_t>(grid.n_phi()) + 2;
    out.precision(17);
    out << "ply\nformat ascii 1.0\n"
        << "element vertex " << grid.size() << "\nproperty double x\nproperty double y\nproperty double z\n"
        << "element face " << faces << "\nproperty list int int vertex_indices\nend_header\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto X = body.at(k);
        out << X[0] << ' ' << X[1] << ' ' << X[2] << '\n';
    }
    for_each_face(grid, [&](const std::vector<std::size_t>& f) {
        out << f.size();
        for (std::size_t idx : f) out << ' ' << idx;
        out << '\n';
    });
}

}  // namespace cmflow
