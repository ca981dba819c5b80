#include "hfvrom/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace hfvrom::io {

static_assert(std::endian::native == std::endian::little, "binary artifacts assume a little-endian host");

namespace {

using Magic = std::array<char, 8>;
constexpr Magic kSnapshotMagic{'H', 'F', 'V', 'R', 'O', 'M', '\0', '\0'};
constexpr Magic kBasisMagic{'H', 'F', 'V', 'P', 'O', 'D', '\0', '\0'};
constexpr Magic kOperatorMagic{'H', 'F', 'V', 'O', 'P', 'S', '\0', '\0'};

// Sanity cap on stored dimensions so corrupt headers fail before allocation.
constexpr std::uint64_t kMaxEntries = std::uint64_t(1) << 34;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <class T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void magic(const Magic& m) {
    out_.write(m.data(), m.size());
    u32(kFormatVersion);
  }
  void doubles(const double* p, std::size_t n) { out_.write(reinterpret_cast<const char*>(p), std::streamsize(n * 8)); }
  /// Shape then row-major entries.
  void matrix(const Eigen::MatrixXd& m) {
    u64(std::uint64_t(m.rows()));
    u64(std::uint64_t(m.cols()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
    doubles(r.data(), std::size_t(r.size()));
  }
  void vector(const Eigen::VectorXd& v) {
    u64(std::uint64_t(v.size()));
    doubles(v.data(), std::size_t(v.size()));
  }
  void tensor(const Tensor3& t) {
    for (auto d : t.dims()) u64(std::uint64_t(d));
    doubles(t.data().data(), std::size_t(t.data().size()));
  }
  void samples(const ForcingSamples& s) {
    f64(s.t0);
    f64(s.spacing);
    matrix(s.values);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const char* what) : in_(in), what_(what) {}

  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) fail(ErrorKind::kIoError, std::string(what_) + " file is truncated");
    return v;
  }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  void magic(const Magic& expected) {
    Magic m{};
    in_.read(m.data(), m.size());
    if (!in_ || m != expected) fail(ErrorKind::kIoError, std::string("not a ") + what_ + " file (bad magic)");
    const auto version = u32();
    if (version != kFormatVersion)
      fail(ErrorKind::kIoError, std::string(what_) + " file has unsupported version " + std::to_string(version));
  }
  Eigen::Index count() {
    const auto n = u64();
    if (n > kMaxEntries) fail(ErrorKind::kIoError, std::string(what_) + " file has an implausible dimension");
    return Eigen::Index(n);
  }
  void doubles(double* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), std::streamsize(n * 8));
    if (!in_) fail(ErrorKind::kIoError, std::string(what_) + " file is truncated");
  }
  Eigen::MatrixXd matrix() {
    const auto r = count(), c = count();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(r, c);
    doubles(m.data(), std::size_t(m.size()));
    return m;
  }
  Eigen::VectorXd vector() {
    Eigen::VectorXd v(count());
    doubles(v.data(), std::size_t(v.size()));
    return v;
  }
  Tensor3 tensor() {
    const auto a = count(), b = count(), c = count();
    Tensor3 t(a, b, c);
    doubles(t.data().data(), std::size_t(t.data().size()));
    return t;
  }
  ForcingSamples samples() {
    ForcingSamples s;
    s.t0 = f64();
    s.spacing = f64();
    s.values = matrix();
    return s;
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof())
      fail(ErrorKind::kIoError, std::string(what_) + " file has trailing data");
  }

 private:
  std::istream& in_;
  const char* what_;
};

void write_basis_record(Writer& w, std::uint32_t tag, const PodBasis& b) {
  w.u32(tag);
  w.u32(b.has_lifting ? 1u : 0u);
  w.vector(b.eigenvalues);
  w.vector(b.cumulative);
  w.matrix(b.modes);
  w.matrix(b.eigenvectors);
  w.vector(b.raw_norms);
  w.matrix(b.weights);
}

PodBasis read_basis_record(Reader& r, std::uint32_t expected_tag) {
  const auto tag = r.u32();
  if (tag != expected_tag) fail(ErrorKind::kIoError, "basis file records are out of order");
  PodBasis b;
  b.variable = static_cast<Variable>(tag);
  b.has_lifting = r.u32() != 0;
  b.eigenvalues = r.vector();
  b.cumulative = r.vector();
  b.modes = r.matrix();
  b.eigenvectors = r.matrix();
  b.raw_norms = r.vector();
  b.weights = r.matrix();
  if (b.eigenvectors.cols() != b.raw_norms.size() || b.weights.cols() != b.raw_norms.size() || b.modes.cols() != b.energy_modes() + b.first_energy_mode())
    fail(ErrorKind::kIoError, "basis record has inconsistent mode counts");
  return b;
}

constexpr std::uint32_t kSourceTag = 3;

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body, bool binary) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) fail(ErrorKind::kIoError, "cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) fail(ErrorKind::kIoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::kIoError, "cannot move output into place at " + path.string());
  }
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) fail(ErrorKind::kIoError, "cannot open " + path.string());
  return in;
}

std::string format_double(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshots(std::ostream& out, const SnapshotSet& s) {
  const Eigen::Index ns = s.size();
  const Eigen::Index nc = ns ? s.species.rows() : 0;
  const Eigen::Index nv = ns ? s.pressure.rows() : 0;
  require(s.momentum.cols() == ns && s.pressure.cols() == ns && s.species.cols() == ns && s.momentum.rows() == 3 * nc,
          ErrorKind::kInvalidArgument, "snapshot set has inconsistent shapes");
  Writer w(out);
  w.magic(kSnapshotMagic);
  w.u64(std::uint64_t(nc));
  w.u64(std::uint64_t(nv));
  w.u64(std::uint64_t(ns));
  for (Eigen::Index n = 0; n < ns; ++n) {
    w.f64(s.times[n]);
    w.doubles(s.momentum.col(n).data(), std::size_t(3 * nc));
    w.doubles(s.pressure.col(n).data(), std::size_t(nv));
    w.doubles(s.species.col(n).data(), std::size_t(nc));
  }
}

SnapshotSet read_snapshots(std::istream& in) {
  Reader r(in, "snapshot");
  r.magic(kSnapshotMagic);
  const auto nc = r.count(), nv = r.count(), ns = r.count();
  SnapshotSet s;
  s.times.resize(ns);
  s.momentum.resize(3 * nc, ns);
  s.pressure.resize(nv, ns);
  s.species.resize(nc, ns);
  for (Eigen::Index n = 0; n < ns; ++n) {
    s.times[n] = r.f64();
    r.doubles(s.momentum.col(n).data(), std::size_t(3 * nc));
    r.doubles(s.pressure.col(n).data(), std::size_t(nv));
    r.doubles(s.species.col(n).data(), std::size_t(nc));
  }
  r.expect_end();
  return s;
}

void write_bases(std::ostream& out, const RomBases& bases) {
  Writer w(out);
  w.magic(kBasisMagic);
  w.u32(bases.species ? 1u : 0u);
  write_basis_record(w, std::uint32_t(Variable::kMomentum), bases.momentum);
  write_basis_record(w, std::uint32_t(Variable::kPressure), bases.pressure);
  if (bases.species) write_basis_record(w, std::uint32_t(Variable::kSpecies), *bases.species);
  w.u32(kSourceTag);
  w.matrix(bases.source);
}

RomBases read_bases(std::istream& in) {
  Reader r(in, "basis");
  r.magic(kBasisMagic);
  const bool species = r.u32() != 0;
  RomBases b;
  b.momentum = read_basis_record(r, std::uint32_t(Variable::kMomentum));
  b.pressure = read_basis_record(r, std::uint32_t(Variable::kPressure));
  if (species) b.species = read_basis_record(r, std::uint32_t(Variable::kSpecies));
  if (r.u32() != kSourceTag) fail(ErrorKind::kIoError, "basis file is missing the source record");
  b.source = r.matrix();
  r.expect_end();
  return b;
}

void write_operators(std::ostream& out, const RomOperators& ops) {
  ops.validate();
  Writer w(out);
  w.magic(kOperatorMagic);
  w.u64(std::uint64_t(ops.n_momentum()));
  w.u64(std::uint64_t(ops.n_pressure()));
  w.u64(std::uint64_t(ops.n_species()));
  w.matrix(ops.M);
  w.matrix(ops.B);
  w.tensor(ops.C);
  w.matrix(ops.K);
  w.matrix(ops.F);
  w.matrix(ops.N);
  w.tensor(ops.D);
  w.matrix(ops.H);
  w.matrix(ops.P);
  w.samples(ops.G);
  w.tensor(ops.E);
  w.matrix(ops.Q);
  w.samples(ops.boundary_rate);
  w.samples(ops.B_upwind);
  w.samples(ops.P_upwind);
  w.samples(ops.Q_upwind);
}

RomOperators read_operators(std::istream& in) {
  Reader r(in, "operator");
  r.magic(kOperatorMagic);
  const auto n = r.count(), np = r.count(), ny = r.count();
  RomOperators ops;
  ops.M = r.matrix();
  ops.B = r.matrix();
  ops.C = r.tensor();
  ops.K = r.matrix();
  ops.F = r.matrix();
  ops.N = r.matrix();
  ops.D = r.tensor();
  ops.H = r.matrix();
  ops.P = r.matrix();
  ops.G = r.samples();
  ops.E = r.tensor();
  ops.Q = r.matrix();
  ops.boundary_rate = r.samples();
  ops.B_upwind = r.samples();
  ops.P_upwind = r.samples();
  ops.Q_upwind = r.samples();
  r.expect_end();
  if (ops.n_momentum() != n || ops.n_pressure() != np || ops.n_species() != ny)
    fail(ErrorKind::kIoError, "operator file header does not match its arrays");
  try {
    ops.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kIoError, std::string("operator file is inconsistent: ") + e.what());
  }
  return ops;
}

void write_coefficients_csv(std::ostream& out, const std::vector<RomState>& states) {
  const Eigen::Index n = states.empty() ? 0 : states.front().a.size();
  const Eigen::Index np = states.empty() ? 0 : states.front().b.size();
  const Eigen::Index ny = states.empty() ? 0 : states.front().c.size();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i) out << ",a_" << i;
  for (Eigen::Index i = 1; i <= np; ++i) out << ",b_" << i;
  for (Eigen::Index i = 1; i <= ny; ++i) out << ",c_" << i;
  out << '\n';
  for (const auto& s : states) {
    require(s.a.size() == n && s.b.size() == np && s.c.size() == ny, ErrorKind::kInvalidArgument,
            "coefficient history has varying lengths");
    out << format_double(s.time);
    for (const auto* v : {&s.a, &s.b, &s.c})
      for (double x : *v) out << ',' << format_double(x);
    out << '\n';
  }
}

std::vector<RomState> read_coefficients_csv(std::istream& in, Eigen::Index n, Eigen::Index np, Eigen::Index ny) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kIoError, "coefficient file is empty");
  std::vector<RomState> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      values.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) fail(ErrorKind::kIoError, "bad number on coefficient line " + std::to_string(line_no));
    }
    if (Eigen::Index(values.size()) != 1 + n + np + ny)
      fail(ErrorKind::kIoError, "coefficient line " + std::to_string(line_no) + " has the wrong column count");
    RomState s;
    s.time = values[0];
    s.a = Eigen::Map<Eigen::VectorXd>(values.data() + 1, n);
    s.b = Eigen::Map<Eigen::VectorXd>(values.data() + 1 + n, np);
    s.c = Eigen::Map<Eigen::VectorXd>(values.data() + 1 + n + np, ny);
    out.push_back(std::move(s));
  }
  return out;
}

void write_error_csv(std::ostream& out, const ErrorReport& report) {
  out << "t,err_rom_wu,err_proj_wu,err_rom_pi,err_proj_pi,err_rom_wy,err_proj_wy\n";
  auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& r : report.rows) {
    out << format_double(r.t) << ',' << cell(r.rom_wu) << ',' << cell(r.proj_wu) << ',' << cell(r.rom_pi) << ','
        << cell(r.proj_pi);
    if (report.has_species)
      out << ',' << cell(r.rom_wy) << ',' << cell(r.proj_wy) << '\n';
    else
      out << ",,\n";
  }
}

void write_eigenvalue_csv(std::ostream& out, const RomBases& bases) {
  std::vector<const PodBasis*> list{&bases.momentum, &bases.pressure};
  if (bases.species) list.push_back(&*bases.species);
  static constexpr const char* kSuffix[] = {"wu", "pi", "wy"};
  out << "index";
  Eigen::Index rows = 0;
  for (std::size_t v = 0; v < list.size(); ++v) {
    out << ",lambda_" << kSuffix[v] << ",cumulative_" << kSuffix[v];
    rows = std::max(rows, list[v]->eigenvalues.size());
  }
  out << '\n';
  for (Eigen::Index i = 0; i < rows; ++i) {
    out << i + 1;
    for (const auto* b : list) {
      if (i < b->eigenvalues.size())
        out << ',' << format_double(b->eigenvalues[i]) << ',' << format_double(b->cumulative[i]);
      else
        out << ",,";
    }
    out << '\n';
  }
}

void write_vtk(std::ostream& out, const PrimalMesh& primal, const DualMesh& dual, const FomState& state,
               const std::string& title) {
  require(state.pressure.size() == primal.num_vertices() && state.momentum.cols() == dual.num_cells() &&
              state.species.size() == dual.num_cells(),
          ErrorKind::kInvalidArgument, "state does not match mesh");
  const Idx nv = primal.num_vertices(), nt = primal.num_tets();
  out << "# vtk DataFile Version 3.0\n" << title << " t=" << format_double(state.time) << "\nASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\nPOINTS " << nv << " double\n";
  for (Idx v = 0; v < nv; ++v) {
    const auto p = primal.vertices().col(v);
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  }
  out << "CELLS " << nt << ' ' << 5 * nt << '\n';
  for (const auto& t : primal.tets()) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (Idx t = 0; t < nt; ++t) out << "10\n";
  out << "POINT_DATA " << nv << "\nSCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (Idx v = 0; v < nv; ++v) out << format_double(state.pressure[v]) << '\n';
  out << "CELL_DATA " << nt << "\nVECTORS momentum double\n";
  for (Idx t = 0; t < nt; ++t) {
    Vec3 m = Vec3::Zero();
    for (Idx f : primal.tet_faces(t)) m += state.momentum.col(f);
    m /= 4.0;
    out << format_double(m.x()) << ' ' << format_double(m.y()) << ' ' << format_double(m.z()) << '\n';
  }
  out << "SCALARS species double 1\nLOOKUP_TABLE default\n";
  for (Idx t = 0; t < nt; ++t) {
    double y = 0.0;
    for (Idx f : primal.tet_faces(t)) y += state.species[f];
    out << format_double(y / 4.0) << '\n';
  }
}

}  // namespace hfvrom::io
