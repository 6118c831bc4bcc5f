#pragma once

// Review, rating and authorship tables. Records keep insertion order, which is
// treated as chronological ("most recent" = last inserted).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "peerrev/error.hpp"
#include "peerrev/types.hpp"

namespace peerrev {

struct Review {
  ReviewerId reviewer = kNoUser;
  PaperId paper = 0;
  double score = 0.0;
  std::optional<double> confidence;
  std::uint32_t year = 0;

  friend bool operator==(const Review&, const Review&) = default;
};

class ReviewTable {
 public:
  ReviewTable() = default;

  explicit ReviewTable(std::span<const Review> records) {
    for (const auto& r : records) add(r);
  }

  // Throws ValidationError on a duplicate (reviewer, paper) or non-finite score.
  void add(const Review& r) {
    if (!std::isfinite(r.score)) {
      throw ValidationError("non-finite score for reviewer " + std::to_string(r.reviewer) +
                            ", paper " + std::to_string(r.paper));
    }
    if (r.confidence && !std::isfinite(*r.confidence)) {
      throw ValidationError("non-finite confidence");
    }
    if (!keys_.insert(key(r.reviewer, r.paper)).second) {
      throw ValidationError("duplicate review (reviewer " + std::to_string(r.reviewer) +
                            ", paper " + std::to_string(r.paper) + ")");
    }
    const std::size_t idx = records_.size();
    records_.push_back(r);
    if (by_paper_.size() <= r.paper) by_paper_.resize(r.paper + 1);
    if (by_reviewer_.size() <= r.reviewer) by_reviewer_.resize(static_cast<std::size_t>(r.reviewer) + 1);
    if (by_paper_[r.paper].empty()) ++n_papers_;
    if (by_reviewer_[r.reviewer].empty()) ++n_reviewers_;
    by_paper_[r.paper].push_back(idx);
    by_reviewer_[r.reviewer].push_back(idx);
  }

  [[nodiscard]] std::span<const Review> records() const { return records_; }
  [[nodiscard]] const Review& operator[](std::size_t i) const { return records_[i]; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] bool empty() const { return records_.empty(); }

  // Indices into records(), in insertion order.
  [[nodiscard]] std::span<const std::size_t> reviews_of_paper(PaperId p) const {
    if (p >= by_paper_.size()) return {};
    return by_paper_[p];
  }
  [[nodiscard]] std::span<const std::size_t> reviews_by(ReviewerId r) const {
    if (r >= by_reviewer_.size()) return {};
    return by_reviewer_[r];
  }

  [[nodiscard]] bool contains(ReviewerId r, PaperId p) const { return keys_.contains(key(r, p)); }

  [[nodiscard]] std::optional<double> score(ReviewerId r, PaperId p) const {
    if (!contains(r, p)) return std::nullopt;
    for (std::size_t i : reviews_of_paper(p)) {
      if (records_[i].reviewer == r) return records_[i].score;
    }
    return std::nullopt;
  }

  // One past the largest paper / reviewer id seen.
  [[nodiscard]] std::size_t paper_id_bound() const { return by_paper_.size(); }
  [[nodiscard]] std::size_t reviewer_id_bound() const { return by_reviewer_.size(); }

  [[nodiscard]] std::size_t paper_count() const { return n_papers_; }
  [[nodiscard]] std::size_t reviewer_count() const { return n_reviewers_; }

  // Paper ids with at least one review, ascending.
  [[nodiscard]] std::vector<PaperId> papers() const {
    std::vector<PaperId> out;
    out.reserve(n_papers_);
    for (std::size_t p = 0; p < by_paper_.size(); ++p) {
      if (!by_paper_[p].empty()) out.push_back(static_cast<PaperId>(p));
    }
    return out;
  }

  [[nodiscard]] std::vector<ReviewerId> reviewers() const {
    std::vector<ReviewerId> out;
    out.reserve(n_reviewers_);
    for (std::size_t r = 0; r < by_reviewer_.size(); ++r) {
      if (!by_reviewer_[r].empty()) out.push_back(static_cast<ReviewerId>(r));
    }
    return out;
  }

  [[nodiscard]] bool has_confidence() const {
    for (const auto& r : records_) {
      if (r.confidence) return true;
    }
    return false;
  }

  friend bool operator==(const ReviewTable& a, const ReviewTable& b) { return a.records_ == b.records_; }

 private:
  static std::uint64_t key(ReviewerId r, PaperId p) {
    return (static_cast<std::uint64_t>(r) << 32) | static_cast<std::uint64_t>(p);
  }

  std::vector<Review> records_;
  std::vector<std::vector<std::size_t>> by_paper_;
  std::vector<std::vector<std::size_t>> by_reviewer_;
  std::unordered_set<std::uint64_t> keys_;
  std::size_t n_papers_ = 0;
  std::size_t n_reviewers_ = 0;
};

struct Rating {
  UserId rater = kNoUser;
  ReviewerId ratee = kNoUser;
  double value = 0.0;
  std::uint32_t year = 0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

class RatingTable {
 public:
  RatingTable() = default;

  explicit RatingTable(std::span<const Rating> records) {
    for (const auto& r : records) add(r);
  }

  void add(const Rating& r) {
    if (r.rater == r.ratee) {
      throw ValidationError("self-rating by user " + std::to_string(r.rater));
    }
    if (!(r.value >= 0.0 && r.value <= 1.0)) {
      throw ValidationError("rating outside [0,1]: " + std::to_string(r.value));
    }
    records_.push_back(r);
  }

  [[nodiscard]] std::span<const Rating> records() const { return records_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] bool empty() const { return records_.empty(); }

  // True when every value is exactly 0 or 1.
  [[nodiscard]] bool is_binary() const {
    for (const auto& r : records_) {
      if (r.value != 0.0 && r.value != 1.0) return false;
    }
    return true;
  }

  friend bool operator==(const RatingTable&, const RatingTable&) = default;

 private:
  std::vector<Rating> records_;
};

// author -> papers they wrote.
using Authorship = std::map<UserId, std::set<PaperId>>;

// Bidirectional mapping between external string identifiers and dense ids.
// Numeric mode keeps canonical unsigned-integer labels as their own id, so
// tables serialized by the simulator reload with identical ids.
class Labels {
 public:
  enum class Mode { undecided, numeric, named };

  [[nodiscard]] Mode mode() const { return mode_; }
  void set_mode(Mode m) {
    if (mode_ != Mode::undecided && mode_ != m) throw ValidationError("mixed identifier styles");
    mode_ = m;
  }

  // Numeric labels index dense vectors, so they are kept below 10^7.
  static constexpr std::size_t kMaxNumericDigits = 7;

  static bool is_canonical_uint(const std::string& s) {
    if (s.empty() || s.size() > kMaxNumericDigits) return false;
    if (s.size() > 1 && s[0] == '0') return false;
    for (char c : s) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  }

  std::uint32_t intern(const std::string& label) {
    if (mode_ == Mode::undecided) mode_ = is_canonical_uint(label) ? Mode::numeric : Mode::named;
    if (mode_ == Mode::numeric) {
      if (!is_canonical_uint(label)) {
        throw ValidationError("identifier '" + label + "' does not fit the numeric style of earlier identifiers");
      }
      const auto id = static_cast<std::uint32_t>(std::stoul(label));
      if (names_.size() <= id) names_.resize(static_cast<std::size_t>(id) + 1);
      names_[id] = label;
      return id;
    }
    auto [it, inserted] = ids_.try_emplace(label, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(label);
    return it->second;
  }

  [[nodiscard]] std::optional<std::uint32_t> find(const std::string& label) const {
    if (mode_ == Mode::numeric) {
      if (!is_canonical_uint(label)) return std::nullopt;
      const auto id = static_cast<std::uint32_t>(std::stoul(label));
      if (id < names_.size() && !names_[id].empty()) return id;
      return std::nullopt;
    }
    auto it = ids_.find(label);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] std::string name(std::uint32_t id) const {
    if (id < names_.size() && !names_[id].empty()) return names_[id];
    return std::to_string(id);
  }

 private:
  Mode mode_ = Mode::undecided;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

}  // namespace peerrev
