#ifndef SOFICLAB_CONFIG_HPP
#define SOFICLAB_CONFIG_HPP

// Strict reader for scenario configs. Every rejection names the offending
// field by its JSON pointer.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "soficlab/errors.hpp"

namespace soficlab {

class SchemaError : public Error {
public:
  SchemaError(std::string pointer, const std::string& message)
      : Error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

private:
  std::string pointer_;
};

class ConfigReader {
public:
  ConfigReader(const nlohmann::json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) throw SchemaError(where(""), "must be an object");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return pointer_.empty() ? "/" : pointer_;
    return pointer_ + "/" + key;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw SchemaError(where(key), message);
  }

  void check(bool ok, const std::string& key, const std::string& message) const {
    if (!ok) fail(key, message);
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const nlohmann::json& raw(const std::string& key) {
    if (!has(key)) fail(key, "is required");
    return j_.at(key);
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    return as_number(j_.at(key), where(key));
  }

  // Nonnegative integer at least `min`.
  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt,
                      std::uint64_t min = 0) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    return as_count(j_.at(key), where(key), min);
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], where(key) + "/" + std::to_string(i)));
    return out;
  }

  std::vector<std::uint64_t> counts(const std::string& key,
                                    std::optional<std::vector<std::uint64_t>> fallback = std::nullopt,
                                    std::uint64_t min = 0) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array of integers");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_count(v[i], where(key) + "/" + std::to_string(i), min));
    return out;
  }

  std::vector<double> distribution(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    auto p = numbers(key, std::move(fallback));
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] < 0.0) throw SchemaError(where(key) + "/" + std::to_string(i), "must be nonnegative");
      total += p[i];
    }
    check(std::abs(total - 1.0) <= 1e-9, key, "must sum to 1");
    return p;
  }

  std::vector<std::uint64_t> increasing_sizes(const std::string& key,
                                              std::optional<std::vector<std::uint64_t>> fallback = std::nullopt,
                                              std::uint64_t min = 1) {
    auto n = counts(key, std::move(fallback), min);
    for (std::size_t i = 1; i < n.size(); ++i)
      if (n[i] <= n[i - 1]) throw SchemaError(where(key) + "/" + std::to_string(i), "must be strictly increasing");
    return n;
  }

  ConfigReader object(const std::string& key) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!has(key)) return ConfigReader(empty, where(key));
    return ConfigReader(j_.at(key), where(key));
  }

  // Rejects fields that were never read.
  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw SchemaError(where(key), "unknown field");
  }

private:
  static double as_number(const nlohmann::json& v, const std::string& at) {
    if (!v.is_number()) throw SchemaError(at, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw SchemaError(at, "must be finite");
    return x;
  }

  static std::uint64_t as_count(const nlohmann::json& v, const std::string& at, std::uint64_t min) {
    if (!v.is_number()) throw SchemaError(at, "must be an integer");
    if (v.is_number_unsigned()) {
      const auto x = v.get<std::uint64_t>();
      if (x < min) throw SchemaError(at, "must be at least " + std::to_string(min));
      return x;
    }
    const double x = v.get<double>();
    if (x != std::floor(x)) throw SchemaError(at, "must be an integer");
    if (x < static_cast<double>(min)) throw SchemaError(at, "must be at least " + std::to_string(min));
    return static_cast<std::uint64_t>(x);
  }

  const nlohmann::json& j_;
  std::string pointer_;
  std::set<std::string> used_;
};

}  // namespace soficlab

#endif  // SOFICLAB_CONFIG_HPP
