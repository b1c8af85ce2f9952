// Copyright 2026 The faultbp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "faultbp/instance_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "faultbp/error.hpp"

namespace faultbp {

namespace {

using nlohmann::json;

const json& field(const json& doc, const char* key) {
  require(doc.contains(key), ErrorCode::kIo, std::string("instance is missing \"") + key + "\"");
  return doc.at(key);
}

Vector<double> read_vector(const json& doc, const char* key, Eigen::Index expected) {
  const json& arr = field(doc, key);
  require(arr.is_array() && static_cast<Eigen::Index>(arr.size()) == expected,
          ErrorCode::kDimensionMismatch,
          std::string("\"") + key + "\" must be an array of length " + std::to_string(expected));
  Vector<double> v(expected);
  for (Eigen::Index k = 0; k < expected; ++k) v[k] = arr[static_cast<std::size_t>(k)].get<double>();
  return v;
}

void write_number(std::ostream& os, double v) { os << std::setprecision(17) << v; }

template <typename Range>
void write_array(std::ostream& os, const Range& values) {
  os << '[';
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (k) os << ',';
    write_number(os, double(values[k]));
  }
  os << ']';
}

}  // namespace

InstanceFile read_instance(std::istream& is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed instance JSON: ") + e.what());
  }
  try {
    const auto m = field(doc, "m").get<Eigen::Index>();
    const auto n = field(doc, "n").get<Eigen::Index>();
    require(m >= 1 && n >= 1, ErrorCode::kInvalidArgument, "m and n must be positive");
    const double sigma = field(doc, "sigma").get<double>();

    std::vector<Eigen::Triplet<double>> entries;
    for (const auto& t : field(doc, "A")) {
      require(t.is_array() && t.size() == 3, ErrorCode::kIo,
              "\"A\" entries must be [row, col, value]");
      entries.emplace_back(t[0].get<int>(), t[1].get<int>(), t[2].get<double>());
    }
    auto model = FaultModeld::from_triplets(m, n, entries, read_vector(doc, "p", n), sigma);
    InstanceFile out{std::move(model), read_vector(doc, "y", m), std::nullopt};
    if (doc.contains("x_true") && !doc.at("x_true").is_null()) {
      const Vector<double> x = read_vector(doc, "x_true", n);
      FaultPattern truth(n);
      for (Eigen::Index s = 0; s < n; ++s) {
        require(x[s] == 0.0 || x[s] == 1.0, ErrorCode::kInvalidArgument,
                "\"x_true\" must be binary");
        truth[s] = x[s] == 1.0 ? 1 : 0;
      }
      out.truth = std::move(truth);
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("bad instance field: ") + e.what());
  }
}

InstanceFile read_instance_file(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), ErrorCode::kIo, "cannot open " + path);
  return read_instance(is);
}

void write_instance(std::ostream& os, const FaultModeld& model,
                    const MeasurementVector<double>& y, const FaultPattern* truth) {
  check_dimensions(model, y);
  os << "{\"m\":" << model.measurements() << ",\"n\":" << model.faults() << ",\"sigma\":";
  write_number(os, model.noise_std());
  os << ",\"p\":";
  write_array(os, model.priors());
  os << ",\"A\":[";
  bool first = true;
  const auto& a = model.by_column();
  for (int s = 0; s < a.outerSize(); ++s) {
    for (SparseByColumn<double>::InnerIterator it(a, s); it; ++it) {
      os << (first ? "" : ",") << '[' << it.row() << ',' << it.col() << ',';
      write_number(os, it.value());
      os << ']';
      first = false;
    }
  }
  os << "],\"y\":";
  write_array(os, y);
  if (truth != nullptr) {
    require(truth->size() == model.faults(), ErrorCode::kDimensionMismatch,
            "truth length does not match fault count");
    os << ",\"x_true\":[";
    for (Eigen::Index s = 0; s < truth->size(); ++s) os << (s ? "," : "") << int((*truth)[s]);
    os << ']';
  }
  os << "}\n";
}

void write_instance_file(const std::string& path, const FaultModeld& model,
                         const MeasurementVector<double>& y, const FaultPattern* truth) {
  std::ofstream os(path);
  require(bool(os), ErrorCode::kIo, "cannot open " + path + " for writing");
  write_instance(os, model, y, truth);
  require(bool(os), ErrorCode::kIo, "failed writing " + path);
}

}  // namespace faultbp
