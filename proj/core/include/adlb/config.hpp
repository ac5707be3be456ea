// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_CONFIG_HPP_
#define ADLB_CONFIG_HPP_

#include <map>
#include <string>
#include <vector>

#include "adlb/common.hpp"

namespace adlb {

// key=value run configuration with a fixed key registry: unknown keys are
// rejected, and the effective values echo into every output sidecar.
class RunConfig {
 public:
  RunConfig();  // registry defaults

  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);  // override
  bool has_key(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_str(const std::string& key) const;
  double get_double(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace adlb

#endif  // ADLB_CONFIG_HPP_
