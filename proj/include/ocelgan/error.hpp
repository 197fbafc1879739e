// Copyright 2026 The ocelgan Authors.
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

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace ocelgan {

/// Every failure raised by the library carries a stable machine-readable
/// code (e.g. "DanglingObjectReference") plus optional key/value details.
/// The CLI and HTTP layers serialize these as {code, message, details}.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message,
        std::map<std::string, std::string> details = {})
      : std::runtime_error(message),
        code_(std::move(code)),
        details_(std::move(details)) {}

  const std::string& code() const noexcept { return code_; }
  const std::map<std::string, std::string>& details() const noexcept {
    return details_;
  }

 private:
  std::string code_;
  std::map<std::string, std::string> details_;
};

namespace errc {
inline constexpr const char* kMalformedJson = "MalformedJson";
inline constexpr const char* kMissingRequiredKey = "MissingRequiredKey";
inline constexpr const char* kDanglingObjectReference = "DanglingObjectReference";
inline constexpr const char* kUnparseableTimestamp = "UnparseableTimestamp";
inline constexpr const char* kInvalidLog = "InvalidLog";
inline constexpr const char* kUnknownObjectType = "UnknownObjectType";
inline constexpr const char* kEmptyInput = "EmptyInput";
inline constexpr const char* kNegativeElapsed = "NegativeElapsed";
inline constexpr const char* kUnknownActivity = "UnknownActivity";
inline constexpr const char* kCaseTooShort = "CaseTooShort";
inline constexpr const char* kTooFewCases = "TooFewCases";
inline constexpr const char* kShapeMismatch = "ShapeMismatch";
inline constexpr const char* kNonFiniteValue = "NonFiniteValue";
inline constexpr const char* kDisconnectedLoss = "DisconnectedLoss";
inline constexpr const char* kNonPositiveTemperature = "NonPositiveTemperature";
inline constexpr const char* kEmptyPrefix = "EmptyPrefix";
inline constexpr const char* kInvalidConfig = "InvalidConfig";
inline constexpr const char* kIoError = "IoError";
inline constexpr const char* kBadFormat = "BadFormat";
inline constexpr const char* kInvalidPrefix = "InvalidPrefix";
inline constexpr const char* kNotFound = "NotFound";
inline constexpr const char* kConflict = "Conflict";
inline constexpr const char* kBadRequest = "BadRequest";
}  // namespace errc

}  // namespace ocelgan
