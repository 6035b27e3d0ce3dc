#include "vrjp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <system_error>

namespace vrjp::io {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad float field: '" + std::string(s) + "'");
  return v;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64_bytes(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string trajectory_csv(const process::Trajectory& traj) {
  std::string out = "n,tau,from,to\n";
  std::size_t n = 0;
  for (const auto& ev : traj.events) {
    out += std::to_string(++n);
    out += ',';
    out += format_double(ev.tau);
    out += ',';
    out += std::to_string(ev.from);
    out += ',';
    out += std::to_string(ev.to);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return fields;
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer field: '" + std::string(s) + "'");
  return v;
}

}  // namespace

process::Trajectory trajectory_from_csv(std::string_view csv, double ell_default,
                                        double horizon_override) {
  process::Trajectory traj;
  traj.ell_default = ell_default;

  std::size_t pos = 0;
  bool header = true;
  std::int64_t lo = 0, hi = 0;
  bool have_range = false;
  while (pos < csv.size()) {
    std::size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    const std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != "n,tau,from,to") throw std::invalid_argument("unexpected trajectory CSV header");
      header = false;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 4) throw std::invalid_argument("trajectory CSV row needs 4 fields");
    process::Event ev;
    ev.tau = parse_double(fields[1]);
    ev.from = parse_int(fields[2]);
    ev.to = parse_int(fields[3]);
    if (!have_range) {
      traj.start = ev.from;
      lo = std::min(ev.from, ev.to);
      hi = std::max(ev.from, ev.to);
      have_range = true;
    } else {
      lo = std::min(lo, std::min(ev.from, ev.to));
      hi = std::max(hi, std::max(ev.from, ev.to));
    }
    traj.events.push_back(ev);
  }
  if (!have_range) throw std::invalid_argument("trajectory CSV holds no events");
  traj.vset = process::VertexSet::segment(lo, hi);
  traj.horizon = horizon_override >= 0.0 ? horizon_override : traj.events.back().tau;
  return traj;
}

std::string series_csv(const diagnostics::DiagnosticSeries& series) {
  std::string out = "t,W0,W1,H,Z,M,A,angleM,alpha,beta,grid\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_double(series.t[i]);
    out += ',';
    out += format_double(series.w0[i]);
    out += ',';
    out += format_double(series.w1[i]);
    out += ',';
    out += format_double(series.h[i]);
    out += ',';
    out += format_double(series.z[i]);
    out += ',';
    out += format_double(series.m[i]);
    out += ',';
    out += format_double(series.a[i]);
    out += ',';
    out += format_double(series.angle_m[i]);
    out += ',';
    out += format_double(series.alpha[i]);
    out += ',';
    out += format_double(series.beta[i]);
    out += ',';
    out += series.is_grid[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string coupled_csv(const coupling::CoupledPaths& paths) {
  std::string out = "k,tilde_L0,tilde_L1,star_L0,star_L1\n";
  for (std::size_t k = 0; k < paths.tilde_l0.size(); ++k) {
    out += std::to_string(k + 1);
    out += ',';
    out += format_double(paths.tilde_l0[k]);
    out += ',';
    out += format_double(paths.tilde_l1[k]);
    out += ',';
    out += format_double(paths.star_l0[k]);
    out += ',';
    out += format_double(paths.star_l1[k]);
    out += '\n';
  }
  return out;
}

std::string local_times_csv(const process::Trajectory& traj) {
  std::int64_t lo = traj.start, hi = traj.start;
  for (const auto& ev : traj.events) {
    lo = std::min(lo, std::min(ev.from, ev.to));
    hi = std::max(hi, std::max(ev.from, ev.to));
  }
  std::string out = "vertex,L\n";
  for (std::int64_t v = lo; v <= hi; ++v) {
    out += std::to_string(v);
    out += ',';
    out += format_double(traj.local_time(v, traj.horizon));
    out += '\n';
  }
  return out;
}

}  // namespace vrjp::io
