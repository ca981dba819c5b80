#pragma once

// Reference computations written independently of the library code paths
// they check: hyper-dual differentiation for the manufactured fields, facet
// loops for the reduced tensors, and small helpers shared by the suites.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "hfvrom/pipeline.hpp"

namespace oracle {

using hfvrom::Idx;
using hfvrom::Vec3;

/// Hyper-dual number: value, two first-order parts and the mixed part, so
/// seeding both e1 and e2 along one direction yields the second derivative.
struct HyperDual {
  double v = 0.0, e1 = 0.0, e2 = 0.0, e12 = 0.0;
};

inline HyperDual constant(double c) { return {c, 0.0, 0.0, 0.0}; }
inline HyperDual operator+(HyperDual a, HyperDual b) { return {a.v + b.v, a.e1 + b.e1, a.e2 + b.e2, a.e12 + b.e12}; }
inline HyperDual operator-(HyperDual a, HyperDual b) { return {a.v - b.v, a.e1 - b.e1, a.e2 - b.e2, a.e12 - b.e12}; }
inline HyperDual operator-(HyperDual a) { return {-a.v, -a.e1, -a.e2, -a.e12}; }
inline HyperDual operator*(HyperDual a, HyperDual b) {
  return {a.v * b.v, a.e1 * b.v + a.v * b.e1, a.e2 * b.v + a.v * b.e2,
          a.e12 * b.v + a.e1 * b.e2 + a.e2 * b.e1 + a.v * b.e12};
}
inline HyperDual operator*(double s, HyperDual a) { return {s * a.v, s * a.e1, s * a.e2, s * a.e12}; }
/// f(a) with f, f', f'' evaluated at a.v.
inline HyperDual lift(HyperDual a, double f, double df, double ddf) {
  return {f, df * a.e1, df * a.e2, df * a.e12 + ddf * a.e1 * a.e2};
}
inline HyperDual sin(HyperDual a) { return lift(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline HyperDual cos(HyperDual a) { return lift(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline HyperDual exp(HyperDual a) {
  const double e = std::exp(a.v);
  return lift(a, e, e, e);
}

/// Manufactured velocity and pressure, transcribed from the case definition.
template <class S>
std::array<S, 3> velocity(const std::array<S, 3>& x, S t) {
  const double pi = std::numbers::pi;
  return {sin(pi * (t * x[1])) * cos(pi * (t * x[2])), -cos(pi * (t * x[2])), exp(-2.0 * pi * (t * t * x[0]))};
}

template <class S>
S pressure(const std::array<S, 3>& x, S t) {
  return t * cos(std::numbers::pi * (x[0] + x[1] + x[2]));
}

/// rho u_t + div(rho u (x) u) + grad p - mu lap u, by hyper-dual differentiation.
inline Vec3 momentum_operator(const Vec3& xp, double tp, double rho, double mu) {
  Vec3 out = Vec3::Zero();
  auto seeded = [&](int dir, bool second) {
    std::array<HyperDual, 3> x{constant(xp[0]), constant(xp[1]), constant(xp[2])};
    HyperDual t = constant(tp);
    HyperDual& s = dir < 3 ? x[std::size_t(dir)] : t;
    s.e1 = 1.0;
    if (second) s.e2 = 1.0;
    return std::pair{x, t};
  };
  {
    auto [x, t] = seeded(3, false);
    const auto u = velocity(x, t);
    for (int i = 0; i < 3; ++i) out[i] += rho * u[std::size_t(i)].e1;
  }
  for (int j = 0; j < 3; ++j) {
    auto [x, t] = seeded(j, true);
    const auto u = velocity(x, t);
    const HyperDual p = pressure(x, t);
    for (int i = 0; i < 3; ++i) {
      out[i] += rho * (u[std::size_t(i)] * u[std::size_t(j)]).e1;
      out[i] -= mu * u[std::size_t(i)].e12;
    }
    out[j] += p.e1;
  }
  return out;
}

/// Facet flux of the transported field u carried by momentum v, summed per
/// cell and divided by the cell volume and rho (central part only).
inline Eigen::MatrixXd facet_transport(const hfvrom::DualMesh& dual, const Eigen::MatrixXd& u,
                                       const Eigen::Matrix3Xd& v, double rho) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  for (const auto& f : dual.facets()) {
    if (f.right == hfvrom::kNone) {
      out.col(f.left) += f.area * (v.col(f.left).dot(f.normal) / rho) * u.col(f.left);
      continue;
    }
    const double ul = v.col(f.left).dot(f.normal) / rho, ur = v.col(f.right).dot(f.normal) / rho;
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
      const double flux = 0.5 * f.area * (ul * u(k, f.left) + ur * u(k, f.right));
      out(k, f.left) += flux;
      out(k, f.right) -= flux;
    }
  }
  for (Idx c = 0; c < dual.num_cells(); ++c) out.col(c) /= dual.volume(c);
  return out;
}

/// C_ijk = sum over interior cells |C| phi_i . transport(phi_j by phi_k).
inline hfvrom::Tensor3 naive_convection(const hfvrom::HybridOperators& ops, const Eigen::MatrixXd& phi, double rho) {
  const auto& dual = ops.dual();
  const Eigen::Index n = phi.cols(), nc = dual.num_cells();
  hfvrom::Tensor3 c(n, n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Matrix3Xd uj = phi.col(j).reshaped(3, nc), vk = phi.col(k).reshaped(3, nc);
      const Eigen::MatrixXd conv = facet_transport(dual, uj, vk, rho);
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Idx cell : ops.interior_cells())
          s += dual.volume(cell) * phi.col(i).segment<3>(3 * cell).dot(conv.col(cell));
        c(i, j, k) = s;
      }
    }
  return c;
}

/// D_ijk = -sum_v psi_i(v) sum_{interior cells} (volume divergence row v) . transport(phi_j by phi_k).
inline hfvrom::Tensor3 naive_pressure_convection(const hfvrom::HybridOperators& ops, const Eigen::MatrixXd& phi,
                                                 const Eigen::MatrixXd& psi, double rho) {
  const auto& dual = ops.dual();
  const Eigen::Index n = phi.cols(), np = psi.cols(), nc = dual.num_cells();
  std::vector<bool> interior(std::size_t(nc), false);
  for (Idx c : ops.interior_cells()) interior[std::size_t(c)] = true;
  const auto& dv = ops.divergence_volume();
  hfvrom::Tensor3 d(np, n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::MatrixXd conv =
          facet_transport(dual, phi.col(j).reshaped(3, nc), phi.col(k).reshaped(3, nc), rho);
      Eigen::VectorXd r = Eigen::VectorXd::Zero(dv.rows());
      for (int outer = 0; outer < dv.outerSize(); ++outer)
        for (Eigen::SparseMatrix<double>::InnerIterator it(dv, outer); it; ++it) {
          const Idx cell = Idx(it.col() / 3);
          if (interior[std::size_t(cell)]) r[it.row()] += it.value() * conv(it.col() % 3, cell);
        }
      for (Eigen::Index i = 0; i < np; ++i) d(i, j, k) = -psi.col(i).dot(r);
    }
  return d;
}

/// E_ijk = sum over interior cells |C| chi_i transport(chi_k by phi_j).
inline hfvrom::Tensor3 naive_species_convection(const hfvrom::HybridOperators& ops, const Eigen::MatrixXd& phi,
                                                const Eigen::MatrixXd& chi, double rho) {
  const auto& dual = ops.dual();
  const Eigen::Index n = phi.cols(), ny = chi.cols(), nc = dual.num_cells();
  hfvrom::Tensor3 e(ny, n, ny);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < ny; ++k) {
      const Eigen::MatrixXd conv = facet_transport(dual, chi.col(k).transpose(), phi.col(j).reshaped(3, nc), rho);
      for (Eigen::Index i = 0; i < ny; ++i) {
        double s = 0.0;
        for (Idx cell : ops.interior_cells()) s += dual.volume(cell) * chi(cell, i) * conv(0, cell);
        e(i, j, k) = s;
      }
    }
  return e;
}

/// Largest entry of |a - b| relative to the largest entry of |b|.
inline double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Uniform flow with a linear pressure balanced by a constant body force,
/// plus a uniform species: a steady state of the full-order scheme.
inline hfvrom::CaseDefinition steady_case() {
  hfvrom::CaseDefinition c = hfvrom::case_by_name("cavity");
  c.name = "steady";
  c.params = {1.0, 1e-2, 1e-2};
  c.time = {1.0, 0.2, 0.02};
  const Vec3 flow(0.3, -0.2, 0.1);
  hfvrom::BoundaryData data;
  data.velocity = [flow](const Vec3&, double) { return flow; };
  data.velocity_rate = [](const Vec3&, double) { return Vec3::Zero().eval(); };
  data.species = [](const Vec3&, double) { return 1.0; };
  for (auto& [name, region] : c.bc.regions) region = data;
  c.source.momentum = [](const Vec3&, double) { return Vec3(0.7, 0.0, 0.0); };
  return c;
}

/// Initial state matching steady_case() on the given operators.
inline hfvrom::FomState steady_state(const hfvrom::HybridOperators& ops) {
  hfvrom::FomState s;
  const Idx nc = ops.dual().num_cells();
  s.momentum = Vec3(0.3, -0.2, 0.1).replicate(1, nc);
  s.pressure = 0.7 * (ops.primal().vertices().row(0).transpose().array() - 0.5).matrix();
  s.pressure.array() -= ops.mean_value(s.pressure);
  s.species = Eigen::VectorXd::Ones(nc);
  return s;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

}  // namespace oracle
