#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "kinder/envcore.hpp"
#include "kinder/motion.hpp"
#include "kinder/rng.hpp"
#include "kinder/suite2d.hpp"
#include "kinder/taskplan.hpp"

namespace kinder {

using ObjectArgs = std::vector<std::string>;
using Params = std::vector<double>;

struct PredicateDef {
  std::string name;
  std::vector<std::string> types;
  std::function<bool(const SceneState&, const ObjectArgs&)> classifier;

  plan::PredicateSig signature() const;
};

/// Classifiers registered for an environment.
const std::vector<PredicateDef>& predicates_for(EnvId env);

/// Every ground atom (over type-compatible object tuples) whose classifier
/// holds.
std::set<plan::Atom> abstract(const SceneState& s, const std::vector<PredicateDef>& preds);

/// Abstract goal for a state (the object set varies with the variant).
std::vector<plan::Atom> goal_atoms(EnvId env, const SceneState& s);

struct ParamBox {
  std::vector<double> lo;
  std::vector<double> hi;
  bool contains(const Params& p) const;
};

struct OptionDone {};
struct OptionFailed {
  std::string reason;
};
using OptionStep = std::variant<ActionDelta, OptionDone, OptionFailed>;

/// Stateful option policy; memory (motion plans, targets) lives here and is
/// created fresh at initiation.
class OptionPolicy {
 public:
  virtual ~OptionPolicy() = default;
  virtual OptionStep next(const SceneState& s) = 0;
};

/// What a skill needs to know about its environment.
struct SkillEnv {
  EnvId env = EnvId::Motion2D;
  RobotSpec spec{};
  WorldBounds world{};
};

struct SkillDef {
  std::string name;
  /// Object parameters, identical to the operator's.
  std::vector<plan::TypedName> objects;
  std::vector<std::string> param_names;
  ParamBox box;
  plan::OperatorSchema op;
  std::string description;
  std::function<Params(const SceneState&, const ObjectArgs&, Rng&)> sampler;
  std::function<bool(const SceneState&, const ObjectArgs&)> initiable;
  std::function<std::unique_ptr<OptionPolicy>(const SceneState&, const ObjectArgs&, const Params&, std::uint64_t seed)>
      policy;
  std::function<bool(const SceneState&, const ObjectArgs&)> terminal;
  /// Stop as soon as terminal holds instead of finishing the script.
  bool early_stop = false;
};

/// Per-environment skill inventory.
std::vector<SkillDef> skill_registry(const SkillEnv& env);
inline std::vector<SkillDef> skill_registry(EnvId env) { return skill_registry(SkillEnv{env, {}, {}}); }
const SkillDef* find_skill(const std::vector<SkillDef>& skills, std::string_view name);

inline constexpr int kOptionStepCap = 200;

struct OptionResult {
  std::vector<SceneState> states;  // states[0] is the start
  std::vector<ActionDelta> actions;
  bool success = false;
  std::string failure;
};

/// Runs one option on `env` until terminal, failure, or `cap` steps. Throws
/// InitiationFailed when the option cannot start.
OptionResult execute_option(EnvInstance& env, const SkillDef& skill, const ObjectArgs& objects, const Params& params,
                            int cap = kOptionStepCap, std::uint64_t seed = 0);

// ---------------------------------------------------------------- export

/// Planning domain built from the registry (types, the robot constant,
/// predicates, operators).
plan::Domain domain_for(EnvId env);
/// Objects sorted by name (the robot is a domain constant).
plan::Problem problem_for(EnvId env, const SceneState& s);

/// Prompt blocks.
std::string controllers_block(EnvId env);
std::string type_hierarchy_block(EnvId env);
std::string typed_objects_block(const SceneState& s);
std::string atoms_block(const std::vector<plan::Atom>& atoms);

}  // namespace kinder
