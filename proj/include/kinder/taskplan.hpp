#pragma once

#include <chrono>
#include <climits>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kinder/errors.hpp"

namespace kinder::plan {

/// A predicate applied to arguments. In schemas, arguments starting with '?'
/// are parameters; anything else is a constant.
struct Atom {
  std::string pred;
  std::vector<std::string> args;

  std::string str() const;
  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct TypedName {
  std::string name;
  std::string type;
  friend bool operator==(const TypedName&, const TypedName&) = default;
};

struct TypeDecl {
  std::string name;
  std::string parent;
  friend bool operator==(const TypeDecl&, const TypeDecl&) = default;
};

struct PredicateSig {
  std::string name;
  std::vector<TypedName> params;
  friend bool operator==(const PredicateSig&, const PredicateSig&) = default;
};

/// STRIPS operator: positive conjunctive preconditions, add and delete lists.
struct OperatorSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<Atom> pre;
  std::vector<Atom> add;
  std::vector<Atom> del;
  friend bool operator==(const OperatorSchema&, const OperatorSchema&) = default;
};

struct Domain {
  std::string name;
  std::vector<TypeDecl> types;
  std::vector<TypedName> constants;
  std::vector<PredicateSig> predicates;
  std::vector<OperatorSchema> operators;

  /// Reflexive; every type descends from "object".
  bool is_subtype(std::string_view child, std::string_view ancestor) const;
  const OperatorSchema* find_operator(std::string_view name) const;
  friend bool operator==(const Domain&, const Domain&) = default;
};

struct Problem {
  std::string name;
  std::string domain;
  std::vector<TypedName> objects;
  std::vector<Atom> init;
  std::vector<Atom> goal;
  friend bool operator==(const Problem&, const Problem&) = default;
};

struct ParseError : KinderError {
  ParseError(int line, int column, std::vector<std::string> expected, const std::string& found);
  int line;
  int column;
  std::vector<std::string> expected;
};

/// `.kd-pddl` reader and writer (an s-expression STRIPS subset with typing and
/// domain constants).
Domain parse_domain(std::string_view text);
Problem parse_problem(std::string_view text, const Domain& domain);
std::string serialize(const Domain& d);
std::string serialize(const Problem& p);

/// Structural checks: arguments drawn from parameters or constants, add and
/// delete disjoint, predicates declared. Throws KinderError.
void validate(const Domain& d);

// ---------------------------------------------------------------- grounding

struct GroundOperator {
  std::string name;  // "(Pick robot block0)"
  std::size_t schema = 0;
  std::vector<std::string> args;
  std::vector<int> pre;
  std::vector<int> add;
  std::vector<int> del;
};

struct GroundProblem {
  std::vector<Atom> atoms;
  std::vector<GroundOperator> ops;
  std::vector<int> init;
  std::vector<int> goal;

  std::optional<int> atom_index(const Atom& a) const;
};

/// One ground operator per type-consistent binding (constants first, then
/// problem objects, in declaration order), minus those with a precondition
/// that is neither in init nor added by any ground operator.
GroundProblem ground(const Domain& d, const Problem& p);

using StateBits = std::vector<std::uint64_t>;

StateBits make_state(std::size_t n_atoms, const std::vector<int>& atoms);
inline bool test_bit(const StateBits& s, int i) { return (s[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1u; }
inline void set_bit(StateBits& s, int i) { s[static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64); }
inline void clear_bit(StateBits& s, int i) { s[static_cast<std::size_t>(i) / 64] &= ~(std::uint64_t{1} << (i % 64)); }
bool holds_all(const StateBits& s, const std::vector<int>& atoms);
bool applicable(const StateBits& s, const GroundOperator& op);
StateBits apply_op(const StateBits& s, const GroundOperator& op);

// ---------------------------------------------------------------- heuristics

inline constexpr int kInfinity = INT_MAX;

/// FF heuristic: relaxed planning graph to fixpoint, then backward extraction
/// with the lowest-layer achiever as supporter (ties by operator name).
int hff(const StateBits& s, const std::vector<int>& goal, const GroundProblem& gp);
/// The extracted relaxed plan in layer order, or nullopt when unreachable.
std::optional<std::vector<int>> relaxed_plan(const StateBits& s, const std::vector<int>& goal, const GroundProblem& gp);

// ---------------------------------------------------------------- search

struct AbstractPlan {
  std::vector<int> ops;
  friend bool operator==(const AbstractPlan&, const AbstractPlan&) = default;
};

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t generated = 0;
  std::size_t plans = 0;
  bool timed_out = false;
};

/// Greedy best-first search on hff with FIFO tie-breaking. Each goal node
/// popped from the open list yields a plan; duplicate plans are suppressed.
/// States are closed until the first plan is found, so an exhausted open list
/// before then proves the task unsolvable.
class PlanStream {
 public:
  PlanStream(const GroundProblem& gp, std::size_t max_plans, std::chrono::duration<double> deadline);

  std::optional<AbstractPlan> next();
  const SearchStats& stats() const { return stats_; }

 private:
  struct Node {
    StateBits state;
    int parent;
    int op;
  };
  struct Entry {
    int h;
    std::uint64_t order;
    int node;
  };
  struct EntryCmp {
    bool operator()(const Entry& a, const Entry& b) const { return a.h != b.h ? a.h > b.h : a.order > b.order; }
  };
  struct BitsHash {
    std::size_t operator()(const StateBits& s) const;
  };

  void push(StateBits state, int parent, int op);

  const GroundProblem& gp_;
  std::size_t max_plans_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<Node> nodes_;
  std::vector<Entry> open_;
  std::unordered_set<StateBits, BitsHash> seen_;
  std::unordered_map<StateBits, int, BitsHash> h_cache_;
  std::unordered_set<std::uint64_t> emitted_;
  std::uint64_t counter_ = 0;
  SearchStats stats_;
  bool done_ = false;
};

}  // namespace kinder::plan
