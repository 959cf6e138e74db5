// Copyright 2026 The kappa-toolkit Authors.
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

#ifndef KAPPA_SERIALIZATION_HPP
#define KAPPA_SERIALIZATION_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kappa/attribution.hpp"
#include "kappa/bootstrap.hpp"
#include "kappa/calibration.hpp"
#include "kappa/controls.hpp"
#include "kappa/curve_fit.hpp"
#include "kappa/sae.hpp"
#include "kappa/spectral.hpp"
#include "kappa/sweep.hpp"
#include "kappa/synthetic_model.hpp"

namespace kappa {

using Json = nlohmann::json;

inline constexpr const char* kModelSchema = "kappa.model/1";
inline constexpr const char* kBatchSchema = "kappa.batch/1";
inline constexpr const char* kSaeMagic = "KSAE";
inline constexpr std::uint32_t kSaeFormatVersion = 1;

/// Finite doubles as JSON numbers; infinities and NaN as the strings
/// "inf", "-inf" and "nan".
Json number(double x);
double to_double(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const GroundTruthSpec& spec);
Json to_json(const TrainConfig& config);
Json to_json(const AttributionConfig& config);
Json to_json(const SweepConfig& config);
Json to_json(const WidthPoint& point);
Json to_json(const Calibration& calibration);
Json to_json(const Interval& interval);
Json to_json(const FitResult& fit);
Json to_json(const DipFitResult& fit);
Json to_json(const BootstrapResult& result);
Json to_json(const WedgeReport& wedge);
Json to_json(const SensitivityReport& report);
Json to_json(const FourCellResult& result);
Json to_json(const RecoveryCell& cell);
Json to_json(const PrivilegeReport& report);
Json to_json(const LayerPoint& point);
Json to_json(const KappaEstimate& estimate);
Json to_json(const ValidationReport& report);

/// Self-describing model document: spec, dictionary, projector and head weights.
Json model_to_json(const GroundTruthModel& model);
GroundTruthModel model_from_json(const Json& j);

Json batch_to_json(const std::vector<ActivationSample>& samples, std::uint64_t seed);
std::vector<ActivationSample> batch_from_json(const Json& j);

/// Binary SAE checkpoint: magic, format version, architecture, shapes, then
/// every tensor as little-endian doubles in row-major order.
void save_sae(const std::filesystem::path& path, const SaeParams& sae);
SaeParams load_sae(const std::filesystem::path& path);

/// Writes \p content to a temporary file beside \p path and renames it into
/// place, so \p path never holds a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace kappa

#endif  // KAPPA_SERIALIZATION_HPP
