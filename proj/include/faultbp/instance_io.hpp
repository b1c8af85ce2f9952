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

// JSON instance files:
//   {"m", "n", "sigma", "p": [...], "A": [[row, col, value], ...], "y": [...],
//    "x_true": [...]}   (x_true optional)

#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "faultbp/model.hpp"

namespace faultbp {

struct InstanceFile {
  FaultModeld model;
  MeasurementVector<double> measurements;
  std::optional<FaultPattern> truth;
};

InstanceFile read_instance(std::istream& is);
InstanceFile read_instance_file(const std::string& path);

/// Doubles are written with 17 significant digits so a read-back is exact.
void write_instance(std::ostream& os, const FaultModeld& model,
                    const MeasurementVector<double>& y, const FaultPattern* truth = nullptr);
void write_instance_file(const std::string& path, const FaultModeld& model,
                         const MeasurementVector<double>& y, const FaultPattern* truth = nullptr);

}  // namespace faultbp
