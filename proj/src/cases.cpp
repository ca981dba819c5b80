#include "hfvrom/cases.hpp"

#include <cmath>
#include <numbers>

namespace hfvrom {

namespace {

constexpr double kPi = std::numbers::pi;

const std::array<std::string, 6> kCubeSides{"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};

}  // namespace

void PodThresholds::validate() const {
  for (double k : {momentum, pressure, species})
    require(k > 0.0 && k <= 1.0, ErrorKind::kConfigError, "energy threshold must lie in (0,1]");
}

ManufacturedSample manufactured_fields(const Vec3& x, double t, double mu) {
  const double a = kPi * t;
  const double sy = std::sin(a * x.y()), cy = std::cos(a * x.y());
  const double sz = std::sin(a * x.z()), cz = std::cos(a * x.z());
  const double e = std::exp(-2.0 * kPi * t * t * x.x());
  const double sp = std::sin(kPi * x.sum());

  ManufacturedSample s;
  s.velocity = Vec3(sy * cz, -cz, e);
  s.pressure = t * std::cos(kPi * x.sum());
  s.velocity_rate = Vec3(kPi * x.y() * cy * cz - kPi * x.z() * sy * sz, kPi * x.z() * sz, -4.0 * kPi * t * x.x() * e);
  // Source as listed for the reference test.
  s.source.x() = kPi * x.y() * cy * cz - kPi * x.z() * sy * sz + 2.0 * kPi * kPi * t * t * mu * sy * cz -
                 kPi * t * cy * cz * cz - kPi * t * sy * sz * e - t * kPi * sp;
  s.source.y() = kPi * x.z() * sz - kPi * kPi * t * t * mu * cz + kPi * t * sz * e - t * kPi * sp;
  s.source.z() = -4.0 * kPi * kPi * std::pow(t, 4) * mu * e - 4.0 * kPi * t * x.x() * e - t * kPi * sp -
                 2.0 * kPi * t * t * sy * e * cz;
  return s;
}

Vec3 manufactured_residual(const Vec3& x, double t, double mu) {
  const ManufacturedSample s = manufactured_fields(x, t, mu);
  const double a = kPi * t;
  const double sy = std::sin(a * x.y()), cy = std::cos(a * x.y());
  const double sz = std::sin(a * x.z()), cz = std::cos(a * x.z());
  const double e = std::exp(-2.0 * kPi * t * t * x.x());

  Eigen::Matrix3d grad;  // grad(i, j) = d u_i / d x_j
  grad << 0.0, a * cy * cz, -a * sy * sz,
          0.0, 0.0, a * sz,
          -2.0 * kPi * t * t * e, 0.0, 0.0;
  const Vec3 lap(-2.0 * a * a * sy * cz, a * a * cz, 4.0 * kPi * kPi * std::pow(t, 4) * e);
  const Vec3 grad_p = Vec3::Constant(-t * kPi * std::sin(kPi * x.sum()));
  const double div = grad.trace();
  // div(u (x) u) = (grad u) u + u div u
  const Vec3 convection = grad * s.velocity + s.velocity * div;
  return s.velocity_rate + convection + grad_p - mu * lap - s.source;
}

double cavity_species(const Vec3& x) { return (x - Vec3::Constant(0.5)).squaredNorm() <= 1e-2 ? 10.0 : 0.0; }

CaseDefinition manufactured_case() {
  CaseDefinition c;
  c.kind = CaseKind::kManufactured;
  c.name = "manufactured";
  c.params = {1.0, 1e-2, 0.0};
  c.time = {1.0, 2.5, 0.01};
  c.kappa = {0.99999, 0.9999, 0.9999};
  c.has_species = false;
  c.use_lifting = false;
  const double mu = c.params.mu;
  BoundaryData data;
  data.velocity = [mu](const Vec3& x, double t) { return manufactured_fields(x, t, mu).velocity; };
  data.velocity_rate = [mu](const Vec3& x, double t) { return manufactured_fields(x, t, mu).velocity_rate; };
  data.species = [](const Vec3&, double) { return 0.0; };
  for (const auto& side : kCubeSides) c.bc.regions[side] = data;
  c.source.momentum = [mu](const Vec3& x, double t) { return manufactured_fields(x, t, mu).source; };
  c.exact_velocity = data.velocity;
  c.exact_pressure = [mu](const Vec3& x, double t) { return manufactured_fields(x, t, mu).pressure; };
  return c;
}

CaseDefinition cavity_case() {
  CaseDefinition c;
  c.kind = CaseKind::kCavity;
  c.name = "cavity";
  c.params = {1.0, 1e-2, 1e-2};
  c.time = {1.0, 5.0, 0.01};
  c.kappa = {0.9999, 0.99, 0.9999};
  c.has_species = true;
  c.use_lifting = true;
  BoundaryData wall;
  wall.velocity = [](const Vec3&, double) { return Vec3(Vec3::Zero()); };
  wall.velocity_rate = wall.velocity;
  wall.species = [](const Vec3&, double) { return 0.0; };
  for (const auto& side : kCubeSides) c.bc.regions[side] = wall;
  BoundaryData lid = wall;
  lid.velocity = [](const Vec3&, double) { return Vec3(1.0, 0.0, 0.0); };
  c.bc.regions["zmax"] = lid;
  return c;
}

CaseDefinition case_by_name(std::string_view name) {
  if (name == "manufactured") return manufactured_case();
  if (name == "cavity") return cavity_case();
  fail(ErrorKind::kConfigError, "unknown case '" + std::string(name) + "'");
}

FomState initial_state(const CaseDefinition& c, const FomSolver& solver) {
  const auto& ops = solver.operators();
  const auto& dual = ops.dual();
  const auto& primal = ops.primal();
  FomState s;
  s.time = 0.0;
  s.momentum.setZero(3, dual.num_cells());
  s.species.setZero(dual.num_cells());
  s.pressure.setZero(primal.num_vertices());
  for (Idx i = 0; i < dual.num_cells(); ++i) {
    if (c.exact_velocity) s.momentum.col(i) = c.params.rho * c.exact_velocity(dual.node(i), 0.0);
    if (c.has_species) s.species[i] = cavity_species(dual.node(i));
  }
  if (c.exact_pressure)
    for (Idx v = 0; v < primal.num_vertices(); ++v) s.pressure[v] = c.exact_pressure(primal.vertices().col(v), 0.0);
  s.pressure.array() -= ops.mean_value(s.pressure);
  solver.project_initial(s);
  return s;
}

Eigen::Matrix3Xd sample_source(const SourceTerm& source, const DualMesh& dual, double t) {
  Eigen::Matrix3Xd f(3, dual.num_cells());
  for (Idx i = 0; i < dual.num_cells(); ++i) f.col(i) = source(dual.node(i), t);
  return f;
}

}  // namespace hfvrom
