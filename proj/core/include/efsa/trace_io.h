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

// CSV and JSON serialization of traces, aggregates and environments.

#ifndef EFSA_TRACE_IO_H_
#define EFSA_TRACE_IO_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "efsa/analysis.h"
#include "efsa/env_model.h"
#include "efsa/trace.h"

namespace efsa {

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double v);

// "# config_hash=...,seed=...,alpha=...,delta=...,diverged=0" then the
// header t,E,Dnorm,psi,e_norm,h_norm,eproj_norm,bits (plus M,Ebar,
// uplink_bits_cum,dnorm_avg_iterate for multi-agent traces).
void WriteTraceCsv(std::ostream& out, const Trace& trace);
Trace ReadTraceCsv(std::istream& in);
Trace ReadTraceCsvFile(const std::string& path);

// t followed by <column>_mean,<column>_std pairs.
void WriteAggregateCsv(std::ostream& out, const AggregateTrace& agg);

std::string EnvironmentToJson(const Environment& env);
// Validates the result; throws InvalidArgument on malformed input.
Environment EnvironmentFromJson(const std::string& text);
Environment LoadEnvironment(const std::string& path);

// {pi, theta_star, omega, sigma_sq}
std::string GroundTruthToJson(const SteadyState& ss);

void WriteTextFile(const std::string& path, const std::string& text);

}  // namespace efsa

#endif  // EFSA_TRACE_IO_H_
