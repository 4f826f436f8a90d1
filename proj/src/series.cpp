#include "perclab/series.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "perclab/error.hpp"

namespace perc {

namespace {

bool starts_with(const std::string& s, const char* p) { return s.rfind(p, 0) == 0; }
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

const char* kHeader = "n,samples,estimate,stderr,observable,m,attempts,s1,s2,s3,s4";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw Error(ErrorCode::usage, "empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error(ErrorCode::usage, "malformed number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw 0;
    return v;
  } catch (...) {
    throw Error(ErrorCode::usage, "malformed integer '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t pos = 0;
    if (!s.empty() && s[0] == '-') throw 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw 0;
    return v;
  } catch (...) {
    throw Error(ErrorCode::usage, "malformed count '" + s + "'");
  }
}

}  // namespace

RowKind row_kind(const std::string& o) {
  if (starts_with(o, "T_exact_") || starts_with(o, "T_atom_") || starts_with(o, "P_conditioning") ||
      starts_with(o, "identity_"))
    return RowKind::exact;
  if (o == "delta_sq_sum") return RowKind::real_mean;
  if (ends_with(o, "_m2")) return RowKind::second_moment;
  if (ends_with(o, "_var")) return RowKind::variance;
  return RowKind::count_mean;
}

void SeriesRow::finalize() {
  switch (row_kind(observable)) {
    case RowKind::count_mean:
      samples = sums.count();
      estimate = static_cast<double>(sums.mean());
      se = static_cast<double>(sums.mean_se());
      break;
    case RowKind::second_moment:
      samples = sums.count();
      estimate = static_cast<double>(sums.second_moment());
      se = static_cast<double>(sums.second_moment_se());
      break;
    case RowKind::variance:
      samples = sums.count();
      estimate = static_cast<double>(sums.variance());
      se = static_cast<double>(sums.variance_jackknife_se());
      break;
    case RowKind::real_mean:
      samples = real.count();
      estimate = real.mean();
      se = real.mean_se();
      break;
    case RowKind::exact:
      break;
  }
}

void Series::sort_rows() {
  std::stable_sort(rows.begin(), rows.end(), [](const SeriesRow& a, const SeriesRow& b) {
    return std::tie(a.observable, a.n, a.m) < std::tie(b.observable, b.n, b.m);
  });
}

const SeriesRow* Series::find(const std::string& observable, int n) const {
  for (const auto& r : rows)
    if (r.observable == observable && r.n == n) return &r;
  return nullptr;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string write_csv(const Series& s) {
  std::ostringstream out;
  out << "# perclab schema=" << s.schema << " command=" << s.command << " config_hash=" << s.config_hash
      << "\n";
  out << kHeader << "\n";
  for (const SeriesRow& r : s.rows) {
    out << r.n << ',' << r.samples << ',' << format_double(r.estimate) << ',' << format_double(r.se) << ','
        << r.observable << ',' << r.m << ',' << r.attempts << ',';
    switch (!r.has_sums ? RowKind::exact : row_kind(r.observable)) {
      case RowKind::exact:
        out << ",,,";
        break;
      case RowKind::real_mean:
        out << format_double(r.real.sum()) << ',' << format_double(r.real.sum_squares()) << ",,";
        break;
      default:
        out << int128_to_string(r.sums.sum(1)) << ',' << int128_to_string(r.sums.sum(2)) << ','
            << int128_to_string(r.sums.sum(3)) << ',' << int128_to_string(r.sums.sum(4));
    }
    out << "\n";
  }
  return out.str();
}

Series parse_csv(const std::string& text) {
  Series s;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false, comment_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (comment_seen) continue;
      comment_seen = true;
      std::istringstream words(line.substr(1));
      std::string w;
      while (words >> w) {
        const auto eq = w.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = w.substr(0, eq), v = w.substr(eq + 1);
        if (k == "schema") s.schema = static_cast<int>(parse_int(v));
        else if (k == "command") s.command = v;
        else if (k == "config_hash") s.config_hash = v;
      }
      if (s.schema != kSchemaVersion)
        throw Error(ErrorCode::usage, "unsupported CSV schema " + std::to_string(s.schema));
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) throw Error(ErrorCode::usage, "unexpected CSV header: " + line);
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 11) throw Error(ErrorCode::usage, "CSV row needs 11 fields: " + line);
    SeriesRow r;
    r.n = static_cast<int>(parse_int(f[0]));
    r.samples = parse_u64(f[1]);
    r.estimate = parse_double(f[2]);
    r.se = parse_double(f[3]);
    r.observable = f[4];
    if (r.observable.empty()) throw Error(ErrorCode::usage, "empty observable name");
    r.m = static_cast<int>(parse_int(f[5]));
    r.attempts = parse_u64(f[6]);
    const bool blank = f[7].empty() && f[8].empty() && f[9].empty() && f[10].empty();
    if (blank && row_kind(r.observable) != RowKind::exact) r.has_sums = false;
    switch (blank ? RowKind::exact : row_kind(r.observable)) {
      case RowKind::exact:
        break;
      case RowKind::real_mean:
        r.real.set(r.samples, parse_double(f[7]), parse_double(f[8]));
        break;
      default:
        r.sums.set(r.samples, int128_from_string(f[7]), int128_from_string(f[8]), int128_from_string(f[9]),
                   int128_from_string(f[10]));
    }
    if (r.has_sums && row_kind(r.observable) != RowKind::exact) {
      // the estimate must follow from the sums, or the row was damaged
      SeriesRow check = r;
      check.finalize();
      const double tol = 1e-12 * std::max(1.0, std::abs(check.estimate));
      if (!(std::abs(check.estimate - r.estimate) <= tol))
        throw Error(ErrorCode::usage, "CSV row estimate does not match its sums: " + line);
    }
    s.rows.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorCode::usage, "not a perclab CSV (no header line)");
  return s;
}

Series merge(const Series& a, const Series& b) {
  if (a.empty_identity()) return b;
  if (b.empty_identity()) return a;
  if (a.schema != b.schema || a.command != b.command || a.config_hash != b.config_hash)
    throw Error(ErrorCode::config_mismatch, "cannot merge results of different configurations (" + a.command +
                                                "/" + a.config_hash + " vs " + b.command + "/" + b.config_hash + ")");
  Series out;
  out.schema = a.schema;
  out.command = a.command;
  out.config_hash = a.config_hash;
  std::map<std::tuple<std::string, int, int>, SeriesRow> rows;
  for (const Series* s : {&a, &b}) {
    for (const SeriesRow& r : s->rows) {
      const auto key = std::make_tuple(r.observable, r.n, r.m);
      auto it = rows.find(key);
      if (it == rows.end()) {
        rows.emplace(key, r);
        continue;
      }
      SeriesRow& acc = it->second;
      if (row_kind(r.observable) != RowKind::exact && (!acc.has_sums || !r.has_sums))
        throw Error(ErrorCode::usage, "row " + r.observable + " has no sums to merge");
      switch (row_kind(r.observable)) {
        case RowKind::exact:
          if (acc.estimate != r.estimate || acc.samples != r.samples)
            throw Error(ErrorCode::config_mismatch, "exact rows disagree for " + r.observable);
          break;
        case RowKind::real_mean:
          acc.real.merge(r.real);
          acc.attempts += r.attempts;
          acc.finalize();
          break;
        default:
          acc.sums.merge(r.sums);
          acc.attempts += r.attempts;
          acc.finalize();
      }
    }
  }
  for (auto& [k, r] : rows) out.rows.push_back(r);
  out.sort_rows();
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

}  // namespace perc
