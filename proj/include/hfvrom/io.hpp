#pragma once

#include <filesystem>
#include <functional>
#include <fstream>
#include <string>
#include <vector>

#include "hfvrom/fom.hpp"
#include "hfvrom/pipeline.hpp"
#include "hfvrom/pod.hpp"
#include "hfvrom/rom.hpp"

namespace hfvrom::io {

inline constexpr std::uint32_t kFormatVersion = 1;

/// Writes through a temporary sibling file renamed into place on success.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body,
                  bool binary = true);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// Binary artifacts: little-endian, 8-byte magic (7 characters + NUL), u32 version.

void write_snapshots(std::ostream& out, const SnapshotSet& snapshots);
SnapshotSet read_snapshots(std::istream& in);

/// Momentum, pressure, optional species and source bases in one file.
void write_bases(std::ostream& out, const RomBases& bases);
RomBases read_bases(std::istream& in);

/// M, B, C, K, F, N, D, H, P, G, E, Q, then the boundary-rate and upwind samples.
void write_operators(std::ostream& out, const RomOperators& ops);
RomOperators read_operators(std::istream& in);

// Text artifacts.

void write_coefficients_csv(std::ostream& out, const std::vector<RomState>& states);
/// Reads a coefficient history; `n`, `n_pressure` and `n_species` split the columns.
std::vector<RomState> read_coefficients_csv(std::istream& in, Eigen::Index n, Eigen::Index n_pressure,
                                            Eigen::Index n_species);
void write_error_csv(std::ostream& out, const ErrorReport& report);
/// One row per snapshot-eigenvalue index: eigenvalue and cumulative energy per variable.
void write_eigenvalue_csv(std::ostream& out, const RomBases& bases);

/// Legacy ASCII unstructured grid: primal vertices and tets, pressure as point
/// data, momentum and species as per-tet means of the face-node values.
void write_vtk(std::ostream& out, const PrimalMesh& primal, const DualMesh& dual, const FomState& state,
               const std::string& title);

/// Opens a file for reading or raises an io-error naming it.
std::ifstream open_input(const std::filesystem::path& path, bool binary = true);

}  // namespace hfvrom::io
