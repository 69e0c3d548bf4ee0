// Copyright 2026 The mart-cpp Authors
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

#ifndef MART__ERRORS_HPP_
#define MART__ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mart
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error
{
public:
  explicit DimensionError(const std::string & what) : Error("dimension error: " + what) {}
};

class ConfigError : public Error
{
public:
  explicit ConfigError(const std::string & what) : Error("config error: " + what) {}
};

class ContractError : public Error
{
public:
  explicit ContractError(const std::string & what) : Error("contract error: " + what) {}
};

class InvariantError : public Error
{
public:
  explicit InvariantError(const std::string & what) : Error("invariant violation: " + what) {}
};

class EvaluationError : public Error
{
public:
  explicit EvaluationError(const std::string & what) : Error("evaluation error: " + what) {}
};

class ParseError : public Error
{
public:
  explicit ParseError(const std::string & what) : Error("parse error: " + what) {}
};

class FormatError : public Error
{
public:
  explicit FormatError(const std::string & what) : Error("format error: " + what) {}
};

class DataError : public Error
{
public:
  explicit DataError(const std::string & what) : Error("data error: " + what) {}
};

class VersionError : public Error
{
public:
  explicit VersionError(const std::string & what) : Error("version error: " + what) {}
};

}  // namespace mart

#endif  // MART__ERRORS_HPP_
