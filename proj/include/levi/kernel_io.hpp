#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "levi/core.hpp"
#include "levi/parametrix.hpp"
#include "levi/resolvent.hpp"

namespace levi {

//! Record container: text header lines "key value…" between "LEVI1" and "end-header", then raw little-endian
//! float64 arrays in the order given by the header's "layout" line.
//!
//! kernel-table layout: nodes[N], weights[N], then p_raw and conv blocks, each k = 0..K, i = 0..N−1, j = 0..N−1
//! (row i ↔ x_i, column j ↔ y_j).
//! zvonkin-map layout: u[R], grad[R] on the nodes first + r·step.
namespace io {

static_assert(std::endian::native == std::endian::little, "records are written little-endian");

struct Header {
  std::string record;
  std::map<std::string, std::string> fields;

  const std::string& at(const std::string& k) const {
    auto it = fields.find(k);
    if (it == fields.end()) fail(ErrorKind::io, "record header lacks '" + k + "'");
    return it->second;
  }
  double number(const std::string& k) const { return std::stod(at(k)); }
  long integer(const std::string& k) const { return std::stol(at(k)); }
};

inline std::string full(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

inline std::string hex(std::uint64_t h) {
  char b[24];
  std::snprintf(b, sizeof b, "0x%016llx", static_cast<unsigned long long>(h));
  return b;
}

inline void write_header(std::ostream& os, const std::string& record,
                         const std::vector<std::pair<std::string, std::string>>& fields) {
  os << "LEVI1\nrecord " << record << '\n';
  for (auto& [k, v] : fields) os << k << ' ' << v << '\n';
  os << "end-header\n";
}

inline Header read_header(std::istream& is) {
  Header h;
  std::string line;
  if (!std::getline(is, line) || line != "LEVI1") fail(ErrorKind::io, "not a levi record");
  while (std::getline(is, line)) {
    if (line == "end-header") return h;
    const auto sp = line.find(' ');
    const std::string k = line.substr(0, sp), v = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (k == "record")
      h.record = v;
    else
      h.fields[k] = v;
  }
  fail(ErrorKind::io, "truncated record header");
}

inline void write_array(std::ostream& os, const double* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_array(std::istream& is, double* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(is.gcount()) != n * sizeof(double)) fail(ErrorKind::io, "truncated record data");
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot write " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot read " + path);
  return is;
}

inline void expect_record(const Header& h, const std::string& record) {
  if (h.record != record) fail(ErrorKind::io, "expected a " + record + " record, found '" + h.record + "'");
}

inline void check_hash(const Header& h, std::uint64_t expected) {
  if (expected != 0 && h.at("model_hash") != hex(expected))
    fail(ErrorKind::model_mismatch, "record was built for model " + h.at("model_hash"));
}

}  // namespace io

inline void write_kernel_table(const std::string& path, const KernelTable& T) {
  const auto& fc = T.frozen->config();
  auto os = io::open_out(path);
  io::write_header(os, "kernel-table",
                   {{"d", "1"},
                    {"model", T.frozen->model().name},
                    {"model_hash", io::hex(T.model_hash)},
                    {"tolerance", io::full(T.tolerance)},
                    {"time_steps", std::to_string(T.time.steps)},
                    {"dt", io::full(T.time.dt)},
                    {"lattice_size", std::to_string(T.lattice.size())},
                    {"lattice_core", io::full(T.lattice.core)},
                    {"lattice_step", io::full(T.lattice.step)},
                    {"lattice_growth", io::full(T.lattice.growth)},
                    {"clamped_cells", std::to_string(T.clamped_cells)},
                    {"min_raw", io::full(T.min_raw)},
                    {"frozen", io::full(fc.extent) + ' ' + io::full(fc.oversample) + ' ' + std::to_string(fc.max_rank) +
                                   ' ' + io::full(fc.rank_tol) + ' ' + io::full(fc.x_range)},
                    {"layout", "nodes weights p_raw conv"}});
  io::write_array(os, T.lattice.nodes.data(), T.lattice.size());
  io::write_array(os, T.lattice.weights.data(), T.lattice.size());
  for (const Sequence* s : {&T.p_raw, &T.conv})
    for (const auto& M : *s) {
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = M;
      io::write_array(os, R.data(), static_cast<std::size_t>(R.size()));
    }
  if (!os) fail(ErrorKind::io, "write failed for " + path);
}

//! Reloads a table for `model`; the stored hash must match.
inline KernelTable read_kernel_table(const std::string& path, const ModelSpec& model) {
  auto is = io::open_in(path);
  const auto h = io::read_header(is);
  io::expect_record(h, "kernel-table");
  io::check_hash(h, model.hash());
  KernelTable T;
  T.model_hash = model.hash();
  T.tolerance = h.number("tolerance");
  T.time.steps = static_cast<int>(h.integer("time_steps"));
  T.time.dt = h.number("dt");
  const int N = static_cast<int>(h.integer("lattice_size"));
  T.lattice.core = h.number("lattice_core");
  T.lattice.step = h.number("lattice_step");
  T.lattice.growth = h.number("lattice_growth");
  T.clamped_cells = h.integer("clamped_cells");
  T.min_raw = h.number("min_raw");
  FrozenConfig fc;
  std::istringstream fz(h.at("frozen"));
  fz >> fc.extent >> fc.oversample >> fc.max_rank >> fc.rank_tol >> fc.x_range;
  T.frozen = std::make_shared<FrozenModel>(model, fc);
  T.lattice.nodes.resize(N);
  T.lattice.weights.resize(N);
  io::read_array(is, T.lattice.nodes.data(), N);
  io::read_array(is, T.lattice.weights.data(), N);
  for (Sequence* s : {&T.p_raw, &T.conv}) {
    s->resize(T.time.steps + 1);
    for (auto& M : *s) {
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(N, N);
      io::read_array(is, R.data(), static_cast<std::size_t>(N) * N);
      M = R;
    }
  }
  T.p.resize(T.time.steps + 1);
  for (int k = 0; k <= T.time.steps; ++k) T.p[k] = k == 0 ? T.p_raw[k] : T.p_raw[k].cwiseMax(0.0).eval();
  return T;
}

inline void write_zvonkin_map(const std::string& path, const ZvonkinMap& map, std::uint64_t model_hash) {
  const auto& u = map.u();
  auto os = io::open_out(path);
  io::write_header(os, "zvonkin-map",
                   {{"d", "1"},
                    {"model_hash", io::hex(model_hash)},
                    {"lambda", io::full(map.lambda())},
                    {"period", io::full(u.period())},
                    {"first", io::full(u.first())},
                    {"step", io::full(u.step())},
                    {"size", std::to_string(u.size())},
                    {"layout", "u grad"}});
  io::write_array(os, u.values().data(), u.size());
  io::write_array(os, map.grad().values().data(), u.size());
  if (!os) fail(ErrorKind::io, "write failed for " + path);
}

//! `model_hash` = 0 skips the model check.
inline ZvonkinMap read_zvonkin_map(const std::string& path, std::uint64_t model_hash = 0) {
  auto is = io::open_in(path);
  const auto h = io::read_header(is);
  io::expect_record(h, "zvonkin-map");
  io::check_hash(h, model_hash);
  const auto n = static_cast<std::size_t>(h.integer("size"));
  std::vector<double> u(n), g(n);
  io::read_array(is, u.data(), n);
  io::read_array(is, g.data(), n);
  const double P = h.number("period"), first = h.number("first"), step = h.number("step");
  return ZvonkinMap(h.number("lambda"), PeriodicField(P, first, step, std::move(u)),
                    PeriodicField(P, first, step, std::move(g)));
}

}  // namespace levi
