#pragma once

#include <cstdint>
#include <limits>

namespace peerrev {

// Users (authors, reviewers, raters) share one id space; papers have another.
using UserId = std::uint32_t;
using ReviewerId = UserId;
using PaperId = std::uint32_t;

inline constexpr UserId kNoUser = std::numeric_limits<UserId>::max();

}  // namespace peerrev
