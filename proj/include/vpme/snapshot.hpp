#pragma once

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/particles.hpp"

namespace vpme {

static_assert(std::endian::native == std::endian::little,
              "snapshot format stores little-endian doubles");

// Dimension-erased particle snapshot: header line
//   vpme-snap v1 d=<dim> N=<count> t=<time>
// followed by raw little-endian doubles: positions (N*d), velocities (N*d),
// weights (N).
struct RawSnapshot {
  int dim = 0;
  std::size_t count = 0;
  double time = 0.0;
  std::vector<double> positions, velocities, weights;
};

template <int Dim>
RawSnapshot snapshot_of(const ParticleEnsemble<Dim>& ens, double time) {
  RawSnapshot s;
  s.dim = Dim;
  s.count = ens.size();
  s.time = time;
  s.positions.resize(ens.size() * Dim);
  s.velocities.resize(ens.size() * Dim);
  s.weights = ens.weights;
  for (std::size_t p = 0; p < ens.size(); ++p)
    for (int a = 0; a < Dim; ++a) {
      s.positions[p * Dim + a] = ens.positions[p][a];
      s.velocities[p * Dim + a] = ens.velocities[p][a];
    }
  return s;
}

template <int Dim>
ParticleEnsemble<Dim> ensemble_of(const RawSnapshot& s) {
  if (s.dim != Dim)
    throw DimensionError("snapshot dimension does not match request");
  ParticleEnsemble<Dim> ens;
  ens.positions.resize(s.count);
  ens.velocities.resize(s.count);
  ens.weights = s.weights;
  for (std::size_t p = 0; p < s.count; ++p)
    for (int a = 0; a < Dim; ++a) {
      ens.positions[p][a] = s.positions[p * Dim + a];
      ens.velocities[p][a] = s.velocities[p * Dim + a];
    }
  return ens;
}

// Writes to a temporary file in the target directory and renames, so a
// snapshot path never holds a half-written file.
inline void write_snapshot(const std::filesystem::path& path,
                           const RawSnapshot& s) {
  if (s.dim < 1 || s.dim > 3 || s.count == 0 ||
      s.positions.size() != s.count * s.dim ||
      s.velocities.size() != s.count * s.dim || s.weights.size() != s.count)
    throw FormatError("snapshot structure is inconsistent");
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string());
    char header[96];
    std::snprintf(header, sizeof header, "vpme-snap v1 d=%d N=%zu t=%.17g\n",
                  s.dim, s.count, s.time);
    out << header;
    auto dump = [&](const std::vector<double>& v) {
      out.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    dump(s.positions);
    dump(s.velocities);
    dump(s.weights);
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <int Dim>
void write_snapshot(const std::filesystem::path& path,
                    const ParticleEnsemble<Dim>& ens, double time) {
  write_snapshot(path, snapshot_of(ens, time));
}

inline RawSnapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw FormatError("missing snapshot header in " + path.string());
  RawSnapshot s;
  {
    int dim = 0;
    std::uint64_t count = 0;
    double time = 0.0;
    // strict header match
    int consumed = -1;
    if (std::sscanf(header.c_str(), "vpme-snap v1 d=%d N=%" SCNu64 " t=%lf%n",
                    &dim, &count, &time, &consumed) != 3 ||
        consumed != static_cast<int>(header.size()))
      throw FormatError("bad snapshot header in " + path.string());
    if (dim < 1 || dim > 3 || count == 0)
      throw FormatError("snapshot header out of range in " + path.string());
    s.dim = dim;
    s.count = static_cast<std::size_t>(count);
    s.time = time;
  }
  auto slurp = [&](std::vector<double>& v, std::size_t m) {
    v.resize(m);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(m * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != m * sizeof(double))
      throw FormatError("truncated snapshot " + path.string());
  };
  slurp(s.positions, s.count * s.dim);
  slurp(s.velocities, s.count * s.dim);
  slurp(s.weights, s.count);
  if (in.get() != std::ifstream::traits_type::eof())
    throw FormatError("trailing bytes in snapshot " + path.string());
  for (const auto* vec : {&s.positions, &s.velocities, &s.weights})
    for (double x : *vec)
      if (!std::isfinite(x))
        throw FormatError("non-finite value in snapshot " + path.string());
  return s;
}

}  // namespace vpme
