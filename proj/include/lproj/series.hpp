#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "lproj/common.hpp"
#include "lproj/quarter.hpp"

namespace lproj {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

/// A quarterly series anchored at a start quarter. NaN entries mark missing
/// observations; after ingestion these may appear only at the edges.
class Series {
 public:
  Series() = default;
  Series(Quarter start, Eigen::VectorXd values)
      : start_(start), values_(std::move(values)) {}

  Quarter start() const { return start_; }
  Quarter end() const { return start_ + static_cast<int>(values_.size()) - 1; }
  long size() const { return values_.size(); }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  bool contains(Quarter t) const {
    int off = t - start_;
    return off >= 0 && off < values_.size();
  }

  double at(Quarter t) const {
    int off = t - start_;
    if (off < 0 || off >= values_.size()) return nan_value;
    return values_[off];
  }

  bool has(Quarter t) const { return std::isfinite(at(t)); }

  /// Same values re-anchored `lag` quarters later, so that the shifted
  /// series evaluated at t returns the original value at t-lag.
  Series shifted(int lag) const { return Series(start_ + lag, values_); }

  /// First quarter with a finite value.
  Quarter first_valid() const {
    for (long i = 0; i < values_.size(); ++i)
      if (std::isfinite(values_[i])) return start_ + static_cast<int>(i);
    throw domain_error("series has no finite values");
  }

  Quarter last_valid() const {
    for (long i = values_.size() - 1; i >= 0; --i)
      if (std::isfinite(values_[i])) return start_ + static_cast<int>(i);
    throw domain_error("series has no finite values");
  }

  /// Contiguous finite core of the series. Throws if an interior NaN is
  /// found, since ingestion guarantees edge-only gaps.
  Series core() const {
    Quarter a = first_valid(), b = last_valid();
    Eigen::VectorXd v(b - a + 1);
    for (int i = 0; i <= b - a; ++i) {
      v[i] = at(a + i);
      if (!std::isfinite(v[i]))
        throw domain_error("interior missing value at " + (a + i).str());
    }
    return Series(a, std::move(v));
  }

 private:
  Quarter start_;
  Eigen::VectorXd values_;
};

/// Aligned collection of named quarterly series over one contiguous index.
/// Every stored vector has the same length; ragged sample edges are NaN.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Quarter start, long length) : start_(start), length_(length) {}

  Quarter start() const { return start_; }
  Quarter end() const { return start_ + static_cast<int>(length_) - 1; }
  long length() const { return length_; }

  bool has(const std::string& name) const { return series_.count(name) > 0; }

  void add(const std::string& name, Eigen::VectorXd values) {
    if (values.size() != length_)
      throw ingest_error("series '" + name + "' has length " +
                         std::to_string(values.size()) + ", index has " +
                         std::to_string(length_));
    series_[name] = std::move(values);
  }

  void add(const std::string& name, const Series& s) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(length_, nan_value);
    for (long i = 0; i < length_; ++i) {
      Quarter t = start_ + static_cast<int>(i);
      if (s.contains(t)) v[i] = s.at(t);
    }
    series_[name] = std::move(v);
  }

  const Eigen::VectorXd& values(const std::string& name) const {
    auto it = series_.find(name);
    if (it == series_.end()) throw domain_error("unknown series '" + name + "'");
    return it->second;
  }

  Series get(const std::string& name) const { return Series(start_, values(name)); }

  double value(const std::string& name, Quarter t) const {
    int off = t - start_;
    if (off < 0 || off >= length_) return nan_value;
    return values(name)[off];
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(series_.size());
    for (const auto& [k, v] : series_) out.push_back(k);
    return out;
  }

 private:
  Quarter start_;
  long length_ = 0;
  std::map<std::string, Eigen::VectorXd> series_;
};

}  // namespace lproj
