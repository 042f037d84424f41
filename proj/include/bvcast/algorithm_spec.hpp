#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bvcast {

enum class BaseKind : std::uint8_t { A, S, SPrime, C, CPrime };
enum class VoteKind : std::uint8_t { A, S, SPrime };

// an algorithm is either the reference hashgraph ("HG") or a
// base/vote combination ("BVC.<base>.<vote>")
struct AlgorithmSpec {
  bool reference_hg = false;
  BaseKind base = BaseKind::S;
  std::uint32_t a = 0;  // C/C' width parameter
  std::uint32_t b = 0;  // C/C' period parameter
  VoteKind vote = VoteKind::S;
  std::uint32_t m = 1;  // voting chain depth
  // optional relaxation: f-decisions accept supported elements instead of
  // strongly followed ones
  bool supported_decision = false;

  bool operator==(const AlgorithmSpec& o) const {
    if (reference_hg != o.reference_hg) return false;
    if (reference_hg) return true;
    return base == o.base && a == o.a && b == o.b && vote == o.vote &&
           m == o.m && supported_decision == o.supported_decision;
  }

  // canonical text form; BVC.S.S(1) prints as its alias BVC.HG
  std::string format() const;

  // parameter sanity for a concrete node count; throws Errc::SyntaxError
  void validate(std::uint32_t n) const;

  static AlgorithmSpec hg();
  static AlgorithmSpec bvc_hg();
};

// parses "HG", "BVC.HG" or "BVC.<base>.<vote>" where base is one of
// A | S | S' | C(a,b) | C'(a,b) and vote is A(m) | S(m) | S'(m).
// throws Errc::SyntaxError mentioning the offending position.
AlgorithmSpec parse_algorithm(const std::string& text);

// the eighteen-algorithm roster used by the benchmark tables, in row order
std::vector<AlgorithmSpec> paper_preset();

}  // namespace bvcast
