// Copyright 2026 The efsa Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "efsa/trace_io.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace efsa {
namespace {

using nlohmann::json;

const char* const kSingleColumns[] = {"t",      "E",          "Dnorm", "psi",
                                      "e_norm", "h_norm", "eproj_norm", "bits"};
const char* const kMultiColumns[] = {"M", "Ebar", "uplink_bits_cum",
                                     "dnorm_avg_iterate"};

std::vector<std::string> Split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw InvalidArgument("malformed number '" + s + "'");
  return v;
}

std::int64_t ParseInt(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument("malformed integer '" + s + "'");
  return v;
}

json VectorJson(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void WriteTraceCsv(std::ostream& out, const Trace& trace) {
  out << "# config_hash=" << trace.meta.config_hash
      << ",seed=" << trace.meta.seed
      << ",alpha=" << FormatDouble(trace.meta.alpha)
      << ",delta=" << FormatDouble(trace.meta.delta)
      << ",diverged=" << (trace.diverged ? 1 : 0) << '\n';
  bool first = true;
  for (const char* c : kSingleColumns) {
    out << (first ? "" : ",") << c;
    first = false;
  }
  if (trace.multi_agent)
    for (const char* c : kMultiColumns) out << ',' << c;
  out << '\n';
  for (const TraceRecord& r : trace.records) {
    out << r.t << ',' << FormatDouble(r.E) << ',' << FormatDouble(r.dnorm) << ','
        << FormatDouble(r.psi) << ',' << FormatDouble(r.e_norm) << ','
        << FormatDouble(r.h_norm) << ',' << FormatDouble(r.eproj_norm) << ','
        << r.bits;
    if (trace.multi_agent)
      out << ',' << r.M << ',' << FormatDouble(r.ebar) << ','
          << r.uplink_bits_cum << ',' << FormatDouble(r.dnorm_avg_iterate);
    out << '\n';
  }
}

Trace ReadTraceCsv(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty trace file");
  if (line.rfind("# ", 0) == 0) {
    for (const std::string& kv : Split(line.substr(2), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      if (key == "config_hash") trace.meta.config_hash = value;
      else if (key == "seed") trace.meta.seed = std::stoull(value);
      else if (key == "alpha") trace.meta.alpha = ParseDouble(value);
      else if (key == "delta") trace.meta.delta = ParseDouble(value);
      else if (key == "diverged") trace.diverged = value == "1";
    }
    if (!std::getline(in, line)) throw InvalidArgument("trace lacks a header");
  }
  const std::vector<std::string> header = Split(line, ',');
  if (header.size() < 8 || header[0] != "t" || header[1] != "E")
    throw InvalidArgument("unrecognized trace header");
  trace.multi_agent = header.size() >= 12;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = Split(line, ',');
    if (f.size() != header.size()) throw InvalidArgument("ragged trace row");
    TraceRecord r;
    r.t = ParseInt(f[0]);
    r.E = ParseDouble(f[1]);
    r.dnorm = ParseDouble(f[2]);
    r.psi = ParseDouble(f[3]);
    r.e_norm = ParseDouble(f[4]);
    r.h_norm = ParseDouble(f[5]);
    r.eproj_norm = ParseDouble(f[6]);
    r.bits = ParseInt(f[7]);
    if (trace.multi_agent) {
      r.M = static_cast<int>(ParseInt(f[8]));
      r.ebar = ParseDouble(f[9]);
      r.uplink_bits_cum = ParseInt(f[10]);
      r.dnorm_avg_iterate = ParseDouble(f[11]);
    }
    trace.records.push_back(r);
  }
  return trace;
}

Trace ReadTraceCsvFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open trace " + path);
  return ReadTraceCsv(in);
}

void WriteAggregateCsv(std::ostream& out, const AggregateTrace& agg) {
  out << "# trials=" << agg.trials << ",diverged=" << agg.diverged << '\n';
  out << 't';
  for (const std::string& c : agg.columns) out << ',' << c << "_mean," << c << "_std";
  out << '\n';
  for (std::size_t i = 0; i < agg.t.size(); ++i) {
    out << agg.t[i];
    for (std::size_t c = 0; c < agg.columns.size(); ++c)
      out << ',' << FormatDouble(agg.mean[c][i]) << ','
          << FormatDouble(agg.std[c][i]);
    out << '\n';
  }
}

std::string EnvironmentToJson(const Environment& env) {
  const int n = env.n();
  const int K = env.K();
  std::vector<double> P, Phi;
  P.reserve(static_cast<std::size_t>(n) * n);
  Phi.reserve(static_cast<std::size_t>(n) * K);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) P.push_back(env.mrp.P(s, t));
    for (int k = 0; k < K; ++k) Phi.push_back(env.features.phi(s, k));
  }
  json j;
  j["n"] = n;
  j["K"] = K;
  j["gamma"] = env.gamma();
  j["P"] = P;
  j["R"] = VectorJson(env.mrp.R);
  j["Phi"] = Phi;
  j["seed"] = env.seed;
  j["mixing_eps"] = env.mixing_eps;
  j["reward_range"] = {env.reward_range.lo, env.reward_range.hi};
  return j.dump() + "\n";
}

Environment EnvironmentFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("environment is not valid JSON: ") + e.what());
  }
  try {
    Environment env;
    const int n = j.at("n").get<int>();
    const int K = j.at("K").get<int>();
    if (n < 2 || K < 1 || K >= n) throw InvalidArgument("bad environment dimensions");
    const auto P = j.at("P").get<std::vector<double>>();
    const auto R = j.at("R").get<std::vector<double>>();
    const auto Phi = j.at("Phi").get<std::vector<double>>();
    if (P.size() != static_cast<std::size_t>(n) * n || R.size() != static_cast<std::size_t>(n) ||
        Phi.size() != static_cast<std::size_t>(n) * K)
      throw InvalidArgument("environment arrays have the wrong sizes");
    env.mrp.gamma = j.at("gamma").get<double>();
    env.mrp.P.resize(n, n);
    env.mrp.R.resize(n);
    env.features.phi.resize(n, K);
    for (int s = 0; s < n; ++s) {
      env.mrp.R(s) = R[s];
      for (int t = 0; t < n; ++t) env.mrp.P(s, t) = P[static_cast<std::size_t>(s) * n + t];
      for (int k = 0; k < K; ++k)
        env.features.phi(s, k) = Phi[static_cast<std::size_t>(s) * K + k];
    }
    env.seed = j.value("seed", std::uint64_t{0});
    env.mixing_eps = j.value("mixing_eps", 0.0);
    const auto range = j.at("reward_range").get<std::vector<double>>();
    if (range.size() != 2) throw InvalidArgument("reward_range needs two numbers");
    env.reward_range = {range[0], range[1]};
    ValidateEnvironment(env);
    return env;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed environment: ") + e.what());
  }
}

Environment LoadEnvironment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open environment " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return EnvironmentFromJson(ss.str());
}

std::string GroundTruthToJson(const SteadyState& ss) {
  json j;
  j["pi"] = VectorJson(ss.pi);
  j["theta_star"] = VectorJson(ss.theta_star);
  j["omega"] = ss.omega;
  j["sigma_sq"] = ss.sigma_sq;
  return j.dump(2) + "\n";
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
  if (!out) throw InvalidArgument("failed writing " + path);
}

}  // namespace efsa
