#include "cmflow/sphere_grid.hpp"

#include "ring_transform.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cmflow {

namespace {

constexpr double kPi = std::numbers::pi;

struct GaussRule {
    std::vector<double> nodes;  // ascending on [-1, 1]
    std::vector<double> weights;
};

// Gauss rule on [-1, 1] for the weight (1 - x^2)^alpha (alpha = 0 is
// Gauss-Legendre). Nodes are mirrored so that x[n-1-i] == -x[i] exactly.
GaussRule gauss_gegenbauer(int n, double alpha) {
    const gsl_integration_fixed_type* type = alpha == 0.0 ? gsl_integration_fixed_legendre : gsl_integration_fixed_gegenbauer;
    gsl_integration_fixed_workspace* ws = gsl_integration_fixed_alloc(type, static_cast<std::size_t>(n), -1.0, 1.0, alpha, 0.0);
    if (ws == nullptr) throw std::runtime_error("failed to build Gauss rule");
    GaussRule rule;
    const double* x = gsl_integration_fixed_nodes(ws);
    const double* w = gsl_integration_fixed_weights(ws);
    std::vector<std::pair<double, double>> nw;
    for (int i = 0; i < n; ++i) nw.emplace_back(x[i], w[i]);
    gsl_integration_fixed_free(ws);
    std::sort(nw.begin(), nw.end());
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < nw.size(); ++i) {
        rule.nodes[i] = nw[i].first;
        rule.weights[i] = nw[i].second;
    }
    const std::size_t un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < un / 2; ++i) {
        const std::size_t m = un - 1 - i;
        const double xs = 0.5 * (rule.nodes[m] - rule.nodes[i]);
        const double ws_avg = 0.5 * (rule.weights[m] + rule.weights[i]);
        rule.nodes[i] = -xs;
        rule.nodes[m] = xs;
        rule.weights[i] = ws_avg;
        rule.weights[m] = ws_avg;
    }
    if (n % 2 == 1) rule.nodes[un / 2] = 0.0;
    return rule;
}

double sphere_area(int n) {
    // |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2)
    return 2.0 * std::pow(kPi, 0.5 * (n + 1)) / boost::math::tgamma(0.5 * (n + 1));
}

std::vector<LatitudeStencil> build_stencils(std::span<const double> theta) {
    const int n = static_cast<int>(theta.size());
    std::vector<LatitudeStencil> out(theta.size());
    std::array<double, 2 * kStencilHalfWidth + 1> x{};
    for (int i = 0; i < n; ++i) {
        LatitudeStencil& st = out[static_cast<std::size_t>(i)];
        for (int o = -kStencilHalfWidth; o <= kStencilHalfWidth; ++o) {
            const int j = i + o;
            StencilTap& tap = st[static_cast<std::size_t>(o + kStencilHalfWidth)];
            double xj = 0.0;
            if (j < 0) {
                tap.ring = -1 - j;
                tap.shifted = true;
                xj = -theta[static_cast<std::size_t>(tap.ring)];
            } else if (j >= n) {
                tap.ring = 2 * n - 1 - j;
                tap.shifted = true;
                xj = 2.0 * kPi - theta[static_cast<std::size_t>(tap.ring)];
            } else {
                tap.ring = j;
                xj = theta[static_cast<std::size_t>(j)];
            }
            x[static_cast<std::size_t>(o + kStencilHalfWidth)] = xj;
        }
        const auto w = fornberg_weights(theta[static_cast<std::size_t>(i)], x, 2);
        for (std::size_t p = 0; p < st.size(); ++p) {
            st[p].d1 = w[1][p];
            st[p].d2 = w[2][p];
        }
    }
    return out;
}

void require_full(const SphereGrid& g, const char* what) {
    if (g.variant() != GridVariant::FullS2) throw std::invalid_argument(std::string(what) + " requires a FullS2 grid");
}

void require_axisym(const SphereGrid& g, const char* what) {
    if (g.variant() != GridVariant::Axisym) throw std::invalid_argument(std::string(what) + " requires an Axisym grid");
}

// Applies the latitude stencil (first and/or second derivative) to `u`.
void latitude_derivatives(const SphereGrid& g, std::span<const double> u, std::vector<double>* d1, std::vector<double>* d2) {
    const int nt = g.n_theta();
    const int np = g.n_phi();
    const int half = np / 2;
    if (d1) d1->assign(u.size(), 0.0);
    if (d2) d2->assign(u.size(), 0.0);
    for (int i = 0; i < nt; ++i) {
        const auto& st = g.stencil(i);
        for (int j = 0; j < np; ++j) {
            const int jshift = (j + half) % np;
            double s1 = 0.0;
            double s2 = 0.0;
            for (const auto& tap : st) {
                const double v = u[g.node(tap.ring, tap.shifted ? jshift : j)];
                s1 += tap.d1 * v;
                s2 += tap.d2 * v;
            }
            const std::size_t idx = g.node(i, j);
            if (d1) (*d1)[idx] = s1;
            if (d2) (*d2)[idx] = s2;
        }
    }
}

// Spectral longitude derivatives: order 1 and 2 of `u`.
void longitude_derivatives(const SphereGrid& g, std::span<const double> u, std::vector<double>* d1, std::vector<double>* d2) {
    const RingTransform& rt = g.rings();
    const int modes = rt.n_modes();
    const int nyquist = g.n_phi() / 2;
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(g.n_theta()) * static_cast<std::size_t>(modes));
    rt.forward(u, spec);
    std::vector<std::complex<double>> work(spec.size());
    if (d1) {
        for (int i = 0; i < g.n_theta(); ++i)
            for (int m = 0; m < modes; ++m) {
                const std::size_t k = static_cast<std::size_t>(i * modes + m);
                work[k] = (m == nyquist) ? 0.0 : std::complex<double>(0.0, m) * spec[k];
            }
        d1->assign(u.size(), 0.0);
        rt.backward(work, *d1);
    }
    if (d2) {
        for (int i = 0; i < g.n_theta(); ++i)
            for (int m = 0; m < modes; ++m) {
                const std::size_t k = static_cast<std::size_t>(i * modes + m);
                work[k] = -static_cast<double>(m) * m * spec[k];
            }
        d2->assign(u.size(), 0.0);
        rt.backward(work, *d2);
    }
}

}  // namespace

std::string to_string(GridVariant v) { return v == GridVariant::FullS2 ? "FullS2" : "Axisym"; }

GridVariant parse_grid_variant(const std::string& name) {
    if (name == "FullS2") return GridVariant::FullS2;
    if (name == "Axisym") return GridVariant::Axisym;
    throw std::invalid_argument("unknown grid variant '" + name + "'");
}

std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> x, int max_order) {
    const int n = static_cast<int>(x.size());
    // c[point][order]
    std::vector<std::vector<double>> c(x.size(), std::vector<double>(static_cast<std::size_t>(max_order + 1), 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[static_cast<std::size_t>(i)] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            c2 *= c3;
            auto& ci = c[static_cast<std::size_t>(i)];
            auto& cim = c[static_cast<std::size_t>(i - 1)];
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    ci[static_cast<std::size_t>(k)] = c1 * (k * cim[static_cast<std::size_t>(k - 1)] - c5 * cim[static_cast<std::size_t>(k)]) / c2;
                ci[0] = -c1 * c5 * cim[0] / c2;
            }
            auto& cj = c[static_cast<std::size_t>(j)];
            for (int k = mn; k >= 1; --k)
                cj[static_cast<std::size_t>(k)] = (c4 * cj[static_cast<std::size_t>(k)] - k * cj[static_cast<std::size_t>(k - 1)]) / c3;
            cj[0] = c4 * cj[0] / c3;
        }
        c1 = c2;
    }
    std::vector<std::vector<double>> out(static_cast<std::size_t>(max_order + 1), std::vector<double>(x.size()));
    for (std::size_t p = 0; p < x.size(); ++p)
        for (std::size_t k = 0; k <= static_cast<std::size_t>(max_order); ++k) out[k][p] = c[p][k];
    return out;
}

std::shared_ptr<const SphereGrid> SphereGrid::build(GridVariant variant, int n_dim, Resolution res) {
    if (variant == GridVariant::FullS2) {
        if (n_dim != 2) throw std::invalid_argument("FullS2 grids require n_dim = 2");
        return full_s2(res.n_theta, res.n_phi);
    }
    return axisym(n_dim, res.n_theta);
}

std::shared_ptr<const SphereGrid> SphereGrid::full_s2(int n_theta, int n_phi) {
    if (n_theta < 8 || n_phi < 8) throw std::invalid_argument("grid resolution must be at least 8 nodes per direction");
    if (n_phi % 2 != 0) throw std::invalid_argument("FullS2 requires an even longitude count (antipodal map must be grid-exact)");

    std::shared_ptr<SphereGrid> g(new SphereGrid());
    g->variant_ = GridVariant::FullS2;
    g->n_dim_ = 2;
    g->n_theta_ = n_theta;
    g->n_phi_ = n_phi;
    g->area_ = 4.0 * kPi;

    const GaussRule rule = gauss_gegenbauer(n_theta, 0.0);
    // Ring 0 is nearest the north pole: cos(theta) descending.
    g->theta_.resize(static_cast<std::size_t>(n_theta));
    std::vector<double> wlat(static_cast<std::size_t>(n_theta));
    for (int i = 0; i < n_theta; ++i) {
        const std::size_t src = static_cast<std::size_t>(n_theta - 1 - i);
        g->theta_[static_cast<std::size_t>(i)] = std::acos(rule.nodes[src]);
        wlat[static_cast<std::size_t>(i)] = rule.weights[src];
    }
    g->phi_.resize(static_cast<std::size_t>(n_phi));
    for (int j = 0; j < n_phi; ++j) g->phi_[static_cast<std::size_t>(j)] = 2.0 * kPi * j / n_phi;

    g->sin_theta_.resize(g->theta_.size());
    g->cot_theta_.resize(g->theta_.size());
    for (std::size_t i = 0; i < g->theta_.size(); ++i) {
        // sin(theta) from the Gauss node keeps the rings mirror-exact.
        const double x = rule.nodes[static_cast<std::size_t>(n_theta) - 1 - i];
        g->sin_theta_[i] = std::sqrt((1.0 - x) * (1.0 + x));
        g->cot_theta_[i] = x / g->sin_theta_[i];
    }

    const double dphi = 2.0 * kPi / n_phi;
    g->weights_.resize(static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_phi));
    g->antipode_.resize(g->weights_.size());
    for (int i = 0; i < n_theta; ++i)
        for (int j = 0; j < n_phi; ++j) {
            const std::size_t k = g->node(i, j);
            g->weights_[k] = wlat[static_cast<std::size_t>(i)] * dphi;
            g->antipode_[k] = g->node(n_theta - 1 - i, (j + n_phi / 2) % n_phi);
        }

    g->stencils_ = build_stencils(g->theta_);
    g->filter_cutoff_.resize(static_cast<std::size_t>(n_theta));
    for (int i = 0; i < n_theta; ++i) {
        const int m = static_cast<int>(std::floor(n_theta * g->sin_theta_[static_cast<std::size_t>(i)]));
        g->filter_cutoff_[static_cast<std::size_t>(i)] = std::max(1, std::min(n_phi / 2 - 1, m));
    }
    g->rings_ = std::make_unique<RingTransform>(n_theta, n_phi);
    return g;
}

std::shared_ptr<const SphereGrid> SphereGrid::axisym(int n_dim, int n_theta) {
    if (n_dim < 2 || n_dim > 8) throw std::invalid_argument("Axisym grids require 2 <= n_dim <= 8");
    if (n_theta < 8) throw std::invalid_argument("grid resolution must be at least 8 nodes per direction");
    if (n_theta % 2 != 0) throw std::invalid_argument("Axisym requires an even latitude count (antipodal map without fixed points)");

    std::shared_ptr<SphereGrid> g(new SphereGrid());
    g->variant_ = GridVariant::Axisym;
    g->n_dim_ = n_dim;
    g->n_theta_ = n_theta;
    g->n_phi_ = 1;
    g->area_ = sphere_area(n_dim);
    g->phi_ = {0.0};

    // Gauss-Gegenbauer in x = cos(theta): the weight (1 - x^2)^{(n-2)/2} is the
    // S^n measure, and the nodes are nearly uniform in theta.
    const GaussRule rule = gauss_gegenbauer(n_theta, 0.5 * (n_dim - 2));
    const double omega = sphere_area(n_dim - 1);
    g->theta_.resize(static_cast<std::size_t>(n_theta));
    g->sin_theta_.resize(g->theta_.size());
    g->cot_theta_.resize(g->theta_.size());
    g->weights_.resize(g->theta_.size());
    g->antipode_.resize(g->theta_.size());
    for (std::size_t i = 0; i < g->theta_.size(); ++i) {
        const double x = rule.nodes[g->theta_.size() - 1 - i];
        g->theta_[i] = std::acos(x);
        g->sin_theta_[i] = std::sqrt((1.0 - x) * (1.0 + x));
        g->cot_theta_[i] = x / g->sin_theta_[i];
        g->weights_[i] = omega * rule.weights[g->theta_.size() - 1 - i];
        g->antipode_[i] = static_cast<std::size_t>(n_theta) - 1 - i;
    }
    g->stencils_ = build_stencils(g->theta_);
    g->filter_cutoff_.assign(g->theta_.size(), 0);
    return g;
}

std::shared_ptr<const SphereGrid> SphereGrid::with_scaled_weights(double factor) const {
    std::shared_ptr<SphereGrid> g(new SphereGrid());
    g->variant_ = variant_;
    g->n_dim_ = n_dim_;
    g->n_theta_ = n_theta_;
    g->n_phi_ = n_phi_;
    g->area_ = area_;
    g->theta_ = theta_;
    g->phi_ = phi_;
    g->sin_theta_ = sin_theta_;
    g->cot_theta_ = cot_theta_;
    g->weights_ = weights_;
    for (double& w : g->weights_) w *= factor;
    g->antipode_ = antipode_;
    g->stencils_ = stencils_;
    g->filter_cutoff_ = filter_cutoff_;
    if (variant_ == GridVariant::FullS2) g->rings_ = std::make_unique<RingTransform>(n_theta_, n_phi_);
    return g;
}

SphereGrid::~SphereGrid() = default;

std::vector<double> SphereGrid::direction(std::size_t node) const {
    const double st = sin_theta_[static_cast<std::size_t>(ring_of(node))];
    const double ct = st * cot_theta_[static_cast<std::size_t>(ring_of(node))];
    if (variant_ == GridVariant::FullS2) {
        const double ph = node_phi(node);
        return {st * std::cos(ph), st * std::sin(ph), ct};
    }
    std::vector<double> x(static_cast<std::size_t>(n_dim_ + 1), 0.0);
    x.front() = st;
    x.back() = ct;
    return x;
}

SupportField::SupportField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw std::invalid_argument("SupportField needs a grid");
    if (values_.size() != grid_->size()) throw std::invalid_argument("SupportField size does not match grid");
}

SupportField::SupportField(GridPtr grid, double value) : SupportField(grid, std::vector<double>(grid->size(), value)) {}

double SupportField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double SupportField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t mid = v.size() / 2;
    return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

double quadrature(const SphereGrid& grid, std::span<const double> values) {
    if (values.size() != grid.size()) throw std::invalid_argument("quadrature: size mismatch");
    std::vector<double> terms(values.size());
    const auto w = grid.weights();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            std::ostringstream msg;
            msg << "quadrature: non-finite integrand at node " << i;
            throw std::domain_error(msg.str());
        }
        terms[i] = values[i] * w[i];
    }
    return pairwise_sum(terms);
}

double quadrature(const SupportField& field) { return quadrature(field.grid(), field.values()); }

S2Derivatives derivatives_s2(const SupportField& field) {
    const SphereGrid& g = field.grid();
    require_full(g, "derivatives_s2");
    S2Derivatives d;
    latitude_derivatives(g, field.values(), &d.u_t, &d.u_tt);
    longitude_derivatives(g, field.values(), &d.u_p, &d.u_pp);
    longitude_derivatives(g, d.u_t, &d.u_tp, nullptr);
    return d;
}

std::vector<Sym2> covariant_hessian_s2(const SupportField& field, const S2Derivatives& d) {
    const SphereGrid& g = field.grid();
    require_full(g, "covariant_hessian_s2");
    std::vector<Sym2> h(g.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const std::size_t r = static_cast<std::size_t>(g.ring_of(k));
        const double s = g.sin_theta()[r];
        const double ct = g.cot_theta()[r];
        h[k].a = d.u_tt[k];
        h[k].b = (d.u_tp[k] - ct * d.u_p[k]) / s;
        h[k].c = d.u_pp[k] / (s * s) + ct * d.u_t[k];
    }
    return h;
}

std::vector<Sym2> covariant_hessian_s2(const SupportField& field) { return covariant_hessian_s2(field, derivatives_s2(field)); }

AxisymDerivatives derivatives_axisym(const SupportField& field) {
    const SphereGrid& g = field.grid();
    require_axisym(g, "derivatives_axisym");
    AxisymDerivatives d;
    latitude_derivatives(g, field.values(), &d.d1, &d.d2);
    return d;
}

AxisymRadii radii_eigen_axisym(const SupportField& field) {
    const SphereGrid& g = field.grid();
    const AxisymDerivatives d = derivatives_axisym(field);
    AxisymRadii r;
    r.radial.resize(g.size());
    r.tangential.resize(g.size());
    const auto u = field.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        r.radial[i] = d.d2[i] + u[i];
        r.tangential[i] = g.cot_theta()[i] * d.d1[i] + u[i];
        if (!std::isfinite(r.radial[i]) || !std::isfinite(r.tangential[i])) {
            std::ostringstream msg;
            msg << "radii_eigen_axisym: non-finite derivative at node " << i << " (theta = " << g.theta()[i] << ")";
            throw std::domain_error(msg.str());
        }
    }
    return r;
}

TangentGradient gradient(const SupportField& field) {
    const SphereGrid& g = field.grid();
    TangentGradient out;
    latitude_derivatives(g, field.values(), &out.g_theta, nullptr);
    if (g.variant() == GridVariant::Axisym) {
        out.g_phi.assign(g.size(), 0.0);
        return out;
    }
    longitude_derivatives(g, field.values(), &out.g_phi, nullptr);
    for (std::size_t k = 0; k < g.size(); ++k) out.g_phi[k] /= g.sin_theta()[static_cast<std::size_t>(g.ring_of(k))];
    return out;
}

void symmetrize_even_inplace(const SphereGrid& grid, std::span<double> values) {
    const auto anti = grid.antipode();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t j = anti[i];
        if (j <= i) continue;
        // (a + b) / 2 is symmetric in a and b, so both entries get the same value.
        const double avg = 0.5 * (values[i] + values[j]);
        values[i] = avg;
        values[j] = avg;
    }
}

SupportField symmetrize_even(const SupportField& field) {
    std::vector<double> v(field.values().begin(), field.values().end());
    symmetrize_even_inplace(field.grid(), v);
    return SupportField(field.grid_ptr(), std::move(v));
}

double antipodal_defect(const SupportField& field) {
    const auto anti = field.grid().antipode();
    const auto v = field.values();
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v[i] - v[anti[i]]));
    return worst;
}

void polar_filter(const SphereGrid& g, std::span<double> values) {
    if (g.variant() != GridVariant::FullS2) return;
    const RingTransform& rt = g.rings();
    const int modes = rt.n_modes();
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(g.n_theta()) * static_cast<std::size_t>(modes));
    rt.forward(values, spec);
    for (int i = 0; i < g.n_theta(); ++i)
        for (int m = g.filter_cutoff(i) + 1; m < modes; ++m) spec[static_cast<std::size_t>(i * modes + m)] = 0.0;
    rt.backward(spec, values);
}

SupportField load_field(const GridPtr& grid, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open field file '" + path + "'");
    std::vector<double> v;
    v.reserve(grid->size());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double x = 0.0;
        std::string rest;
        if (!(ls >> x) || (ls >> rest)) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected one number");
        if (!std::isfinite(x)) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-finite value");
        v.push_back(x);
    }
    if (v.size() != grid->size())
        throw std::runtime_error(path + ": expected " + std::to_string(grid->size()) + " values, found " + std::to_string(v.size()));
    return SupportField(grid, std::move(v));
}

void save_field(const SupportField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write field file '" + path + "'");
    out.precision(17);
    for (double x : field.values()) out << x << '\n';
}

}  // namespace cmflow
