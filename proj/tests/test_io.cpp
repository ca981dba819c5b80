#include <doctest.h>

#include <sstream>

#include "hfvrom/config.hpp"
#include "hfvrom/io.hpp"
#include "oracles.hpp"

using namespace hfvrom;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kInvalidArgument;
}

struct Fixture {
  Discretization disc{build_cube_primal(2)};
  CaseDefinition c = case_by_name("cavity");
  SnapshotSet snaps;
  RomBases bases;
  RomOperators ops;

  Fixture() {
    c.time.t_end = 0.05;
    // The cavity ball holds no dual node this coarse, so seed a smooth species field.
    const FomSolver solver(disc.ops, c.params, c.bc, c.source);
    FomState s = initial_state(c, solver);
    for (Idx i : disc.ops.interior_cells()) s.species[i] = std::sin(3.0 * disc.dual.node(i).sum());
    snaps = solver.run(s, c.time);
    bases = build_bases(c, disc, snaps);
    ops = assemble_operators(disc.ops, bases, c.params, c.bc, assembly_options(c, disc, snaps, RomRunSettings{}));
  }
};

}  // namespace

TEST_CASE("binary artifacts round-trip byte for byte") {
  const Fixture f;
  std::stringstream s1, s2, a, b, c;
  io::write_snapshots(s1, f.snaps);
  std::stringstream s1i(s1.str());
  io::write_snapshots(s2, io::read_snapshots(s1i));
  CHECK(s1.str() == s2.str());
  io::write_bases(a, f.bases);
  std::stringstream ai(a.str());
  io::write_bases(b, io::read_bases(ai));
  CHECK(a.str() == b.str());
  io::write_operators(c, f.ops);
  std::stringstream ci(c.str());
  const RomOperators back = io::read_operators(ci);
  std::stringstream d;
  io::write_operators(d, back);
  CHECK(c.str() == d.str());
  CHECK(back.B_upwind.values == f.ops.B_upwind.values);
}

TEST_CASE("corrupt binary artifacts are rejected") {
  const Fixture f;
  std::stringstream s;
  io::write_snapshots(s, f.snaps);
  std::string bytes = s.str();
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK(kind_of([&] {
          std::istringstream in(bad);
          io::read_snapshots(in);
        }) == ErrorKind::kIoError);
  CHECK(kind_of([&] {
          std::istringstream in(bytes.substr(0, bytes.size() / 2));
          io::read_snapshots(in);
        }) == ErrorKind::kIoError);
  CHECK(kind_of([&] {
          std::istringstream in(bytes + "x");
          io::read_snapshots(in);
        }) == ErrorKind::kIoError);
  CHECK(kind_of([&] {
          std::istringstream in(bytes);
          io::read_bases(in);
        }) == ErrorKind::kIoError);
}

TEST_CASE("text artifacts") {
  const Fixture f;
  const auto rom = run_rom(f.ops, f.bases, f.disc, f.snaps, RomRunSettings{});
  std::stringstream csv;
  io::write_coefficients_csv(csv, rom);
  std::stringstream in(csv.str());
  const auto back = io::read_coefficients_csv(in, f.bases.momentum.size(), f.bases.pressure.size(),
                                              f.bases.species->size());
  std::stringstream again;
  io::write_coefficients_csv(again, back);
  CHECK(csv.str() == again.str());

  std::stringstream err;
  io::write_error_csv(err, compare(f.disc, f.bases, f.snaps, rom));
  std::string header;
  std::getline(err, header);
  CHECK(header == "t,err_rom_wu,err_proj_wu,err_rom_pi,err_proj_pi,err_rom_wy,err_proj_wy");

  std::stringstream eig;
  io::write_eigenvalue_csv(eig, f.bases);
  int lines = 0;
  for (std::string line; std::getline(eig, line);) ++lines;
  CHECK(lines == 1 + f.snaps.size());

  CHECK(std::stod(io::format_double(0.1)) == 0.1);
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("config defaults follow the case presets") {
  const RunConfig m = parse_config("[case]\nname = manufactured\nn = 4\n");
  const CaseDefinition mc = m.make_case();
  CHECK(m.n == 4);
  CHECK(mc.time.cfl == 1.0);
  CHECK(mc.kappa.momentum == 0.99999);
  CHECK(mc.kappa.pressure == 0.9999);
  CHECK(m.rom.dt_divisor == 50);
  CHECK(!m.rom.model.ablate_pressure);
  CHECK(m.tolerance == 1e-10);

  const CaseDefinition cc = parse_config("# cavity\n[case]\nname = cavity\nn = 8\n[rom]\nablate_pressure = true\n")
                                .make_case();
  CHECK(cc.kappa.momentum == 0.9999);
  CHECK(cc.kappa.pressure == 0.99);
  CHECK(cc.kappa.species == 0.9999);

  const RunConfig o = parse_config("[case]\nname = cavity\nn = 2\n[time]\nt_end = 0.5 # short\n[pod]\nn_wu = 3\n");
  CHECK(o.make_case().time.t_end == 0.5);
  CHECK(o.counts.momentum == 3);
}

TEST_CASE("config errors name the line") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kConfigError);
      return e.what();
    }
    return "";
  };
  const std::string head = "[case]\nname = manufactured\nn = 4\n";
  CHECK(message(head + "[pod]\nkappa_wu = 1.5\n").find("line 5") != std::string::npos);
  CHECK(message(head + "[pod]\nkappa_xx = 0.5\n").find("kappa_xx") != std::string::npos);
  CHECK(message(head + "[mesh]\n").find("line 4") != std::string::npos);
  CHECK(message(head + "n = 5\n").find("duplicate") != std::string::npos);
  CHECK(message("[case]\nn = 4\n").find("name") != std::string::npos);
  CHECK(message(head + "[fluid]\nrho = abc\n").find("rho") != std::string::npos);
  CHECK(message(head + "[time]\ncfl = -1\n").find("cfl") != std::string::npos);
}

TEST_CASE("reruns are byte identical") {
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const Fixture f;
    std::stringstream s;
    io::write_snapshots(s, f.snaps);
    io::write_bases(s, f.bases);
    io::write_operators(s, f.ops);
    if (run == 0)
      first = s.str();
    else
      CHECK(first == s.str());
  }
}
