#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"

#include "kinder/baselines.hpp"
#include "kinder/errors.hpp"

namespace kinder {

namespace {
#include "prompt_templates.inc"

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto c = s.find(',', start);
    out.push_back(trim(s.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start)));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

PlanStep parse_line(const std::string& line, int lineno) {
  static const std::regex re(R"(^([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*\[([^\[\]]*)\]$)");
  std::smatch m;
  if (!std::regex_match(line, m, re)) throw LineParseError(lineno, "expected name(obj:type, ...)[v, ...]");
  PlanStep st;
  st.skill = m[1].str();
  for (const auto& arg : split_commas(m[2].str())) {
    const auto colon = arg.find(':');
    if (arg.empty() || colon == 0) throw LineParseError(lineno, "empty object argument");
    st.objects.push_back(trim(arg.substr(0, colon)));
  }
  for (const auto& v : split_commas(m[3].str())) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw LineParseError(lineno, "bad number '" + v + "'");
    st.params.push_back(x);
  }
  return st;
}

/// Non-empty lines after the last "Plan:" line, with 1-based line numbers.
std::vector<std::pair<int, std::string>> plan_lines(std::string_view text) {
  std::vector<std::string> all;
  std::istringstream in{std::string(text)};
  for (std::string l; std::getline(in, l);) all.push_back(l);
  auto header = all.size();
  for (std::size_t i = all.size(); i-- > 0;) {
    if (trim(all[i]) == "Plan:") {
      header = i;
      break;
    }
  }
  if (header == all.size()) throw NoPlanBlock("no 'Plan:' line in the response");
  std::vector<std::pair<int, std::string>> out;
  for (std::size_t i = header + 1; i < all.size(); ++i) {
    auto l = trim(all[i]);
    if (!l.empty()) out.emplace_back(static_cast<int>(i) + 1, std::move(l));
  }
  return out;
}

std::string chomp(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

}  // namespace

LineParseError::LineParseError(int l, std::string r)
    : KinderError("line " + std::to_string(l) + ": " + r), line(l), reason(std::move(r)) {}

TransportError::TransportError(const std::string& what, std::string req, std::string resp)
    : KinderError(what), request(std::move(req)), response(std::move(resp)) {}

std::string_view prompt_template(PromptMode mode) {
  return mode == PromptMode::ZeroShot ? kPlanTemplate : kInContextTemplate;
}

std::string render_template(std::string_view tpl, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    const auto open = tpl.find('{', i);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(i));
      break;
    }
    const auto close = tpl.find('}', open);
    const auto name = close == std::string_view::npos ? std::string_view{} : tpl.substr(open + 1, close - open - 1);
    const bool is_placeholder = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || c == '_';
    });
    if (!is_placeholder) {
      out.append(tpl.substr(i, open + 1 - i));
      i = open + 1;
      continue;
    }
    const auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
    if (it == values.end()) throw MissingPlaceholder("no value for {" + std::string(name) + "}");
    out.append(tpl.substr(i, open - i));
    out.append(it->second);
    i = close + 1;
  }
  return out;
}

std::string build_prompt(EnvId env, const SceneState& s, PromptMode mode, const std::vector<std::string>& examples) {
  const auto init = abstract(s, predicates_for(env));
  std::vector<std::pair<std::string, std::string>> v{
      {"controllers", chomp(controllers_block(env))},
      {"typed_objects", chomp(typed_objects_block(s))},
      {"type_hierarchy", chomp(type_hierarchy_block(env))},
      {"goal_str", chomp(atoms_block(goal_atoms(env, s)))},
      {"init_state_str", chomp(atoms_block({init.begin(), init.end()}))},
  };
  if (mode == PromptMode::InContext) {
    if (examples.empty()) throw MissingPlaceholder("no value for {in_context_examples}");
    std::string ex;
    for (std::size_t i = 0; i < examples.size(); ++i) ex += (i ? "\n" : "") + chomp(examples[i]);
    v.emplace_back("in_context_examples", ex);
  }
  return render_template(prompt_template(mode), v);
}

std::vector<PlanStep> parse_plan(std::string_view text) {
  std::vector<PlanStep> out;
  for (const auto& [no, l] : plan_lines(text)) out.push_back(parse_line(l, no));
  return out;
}

std::vector<PlanStep> parse_plan(std::string_view text, const std::vector<SkillDef>& skills) {
  std::vector<PlanStep> out;
  for (const auto& [no, l] : plan_lines(text)) {
    auto st = parse_line(l, no);
    const auto* sk = find_skill(skills, st.skill);
    if (!sk) throw LineParseError(no, "unknown skill '" + st.skill + "'");
    if (st.objects.size() != sk->objects.size()) {
      throw LineParseError(no, st.skill + " takes " + std::to_string(sk->objects.size()) + " objects, got " +
                                   std::to_string(st.objects.size()));
    }
    if (st.params.size() != sk->box.lo.size()) {
      throw LineParseError(no, st.skill + " takes " + std::to_string(sk->box.lo.size()) + " parameters, got " +
                                   std::to_string(st.params.size()));
    }
    out.push_back(std::move(st));
  }
  return out;
}

// ---------------------------------------------------------------- transports

std::string ChatRequest::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  j["temperature"] = temperature;
  return j.dump();
}

std::string StubTransport::complete(const ChatRequest& req) {
  if (replies_.empty()) throw TransportError("stub transport has no replies", req.to_json(), "");
  const auto& r = replies_[std::min(calls_, replies_.size() - 1)];
  ++calls_;
  return r;
}

CassetteTransport CassetteTransport::replay(const std::string& path) {
  CassetteTransport t;
  t.path_ = path;
  std::ifstream in(path);
  if (!in) throw TransportError("cannot open cassette " + path, "", "");
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::ordered_json::parse(line);
    t.tape_.push_back({j.at("request").dump(), j.at("response").get<std::string>()});
  }
  return t;
}

CassetteTransport CassetteTransport::record(const std::string& path, Transport& inner) {
  CassetteTransport t;
  t.path_ = path;
  t.inner_ = &inner;
  return t;
}

std::string CassetteTransport::complete(const ChatRequest& req) {
  const std::string payload = nlohmann::ordered_json::parse(req.to_json()).dump();
  if (inner_) {
    std::string resp = inner_->complete(req);
    std::ofstream out(path_, std::ios::app);
    nlohmann::ordered_json j;
    j["request"] = nlohmann::ordered_json::parse(payload);
    j["response"] = resp;
    out << j.dump() << "\n";
    return resp;
  }
  Exchange* last = nullptr;
  for (auto& e : tape_) {
    if (e.request != payload) continue;
    if (!e.used) {
      e.used = true;
      return e.response;
    }
    last = &e;
  }
  if (last) return last->response;
  throw TransportError("no recorded exchange matches the request in " + path_, payload, "");
}

SharedTransport::SharedTransport(std::shared_ptr<Transport> inner)
    : inner_(std::move(inner)), mu_(std::make_shared<std::mutex>()) {}

std::string SharedTransport::complete(const ChatRequest& req) {
  std::lock_guard<std::mutex> lock(*mu_);
  return inner_->complete(req);
}

// ---------------------------------------------------------------- solve

LlmResult llm_solve(const EnvInstance& env, const SceneState& state, Transport& transport, const LlmConfig& cfg,
                    std::uint64_t seed) {
  LlmResult out;
  const EnvId id = env.variant().env;
  out.prompt = build_prompt(id, state, cfg.mode, cfg.examples);
  ChatRequest req{cfg.model, {{"user", out.prompt}}, cfg.temperature};
  out.response = transport.complete(req);
  const auto skills = skill_registry(SkillEnv{id, env.robot_spec(), env.variant().world});
  try {
    out.plan = parse_plan(out.response, skills);
  } catch (const NoPlanBlock& e) {
    out.diagnostics.push_back(std::string("NoPlanBlock: ") + e.what());
    return out;
  } catch (const LineParseError& e) {
    out.diagnostics.push_back(std::string("LineParseError: ") + e.what());
    return out;
  }
  const auto domain = domain_for(id);
  for (std::size_t i = 0; i < out.plan.size(); ++i) {
    const auto& st = out.plan[i];
    const auto* sk = find_skill(skills, st.skill);
    for (std::size_t k = 0; k < st.objects.size(); ++k) {
      const auto* o = state.find(st.objects[k]);
      const std::string where = "step " + std::to_string(i + 1) + " " + st.skill + ": ";
      if (!o) {
        out.diagnostics.push_back("UnknownObject: " + where + "no object named '" + st.objects[k] + "'");
        return out;
      }
      const std::string_view type = type_def(o->type).name;
      if (!domain.is_subtype(type, sk->objects[k].type)) {
        out.diagnostics.push_back("TypeMismatch: " + where + "'" + st.objects[k] + "' is a " + std::string(type) +
                                  ", expected " + sk->objects[k].type);
        return out;
      }
    }
  }
  EnvInstance sim = env.clone();
  sim.set_state(state);
  std::vector<ActionDelta> actions;
  for (std::size_t i = 0; i < out.plan.size(); ++i) {
    const auto& st = out.plan[i];
    const auto* sk = find_skill(skills, st.skill);
    Params p = st.params;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::clamp(p[k], sk->box.lo[k], sk->box.hi[k]);
    try {
      const auto r = execute_option(sim, *sk, st.objects, p, cfg.option_step_cap, fnv64({seed, i}));
      actions.insert(actions.end(), r.actions.begin(), r.actions.end());
      if (!r.success) out.diagnostics.push_back("step " + std::to_string(i + 1) + " " + st.skill + ": " + r.failure);
    } catch (const InitiationFailed& e) {
      out.diagnostics.push_back(std::string("InitiationFailed: ") + e.what());
      return out;
    } catch (const KinderError& e) {
      out.diagnostics.push_back("step " + std::to_string(i + 1) + ": " + e.what());
      return out;
    }
  }
  out.actions = std::move(actions);
  return out;
}

std::string format_plan(EnvId env, const std::vector<PlanStep>& plan, int digits) {
  const auto skills = skill_registry(env);
  std::string out;
  for (const auto& st : plan) {
    const auto* sk = find_skill(skills, st.skill);
    if (!sk) throw KinderError("unknown skill " + st.skill);
    out += st.skill + "(";
    for (std::size_t k = 0; k < st.objects.size(); ++k) {
      out += (k ? ", " : "") + st.objects[k] + ":" + sk->objects[k].type;
    }
    out += ")[";
    for (std::size_t k = 0; k < st.params.size(); ++k) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.*g", digits, st.params[k]);
      out += (k ? ", " : "") + std::string(buf);
    }
    out += "]\n";
  }
  return out;
}

std::vector<std::string> default_examples(EnvId env, int n) {
  std::vector<std::string> out;
  for (int i = 0; out.size() < static_cast<std::size_t>(n) && i < 4 * n + 8; ++i) {
    // Solve a small instance with the bilevel planner and print its plan.
    const auto v = VariantSpec{env, env == EnvId::Motion2D ? 0 : 1, {}};
    EnvInstance e(v);
    const auto& s = e.reset(fnv64({0x1c0ffee, static_cast<std::uint64_t>(i)}));
    BilevelConfig cfg;
    cfg.total_deadline_s = 20;
    const auto r = bilevel_solve(e, s, cfg, static_cast<std::uint64_t>(i));
    if (!r.actions) continue;
    std::string ex = "Objects:\n" + typed_objects_block(s) + "Goal:\n" + atoms_block(goal_atoms(env, s)) +
                     "Initial state:\n";
    const auto init = abstract(s, predicates_for(env));
    ex += atoms_block({init.begin(), init.end()});
    ex += "Plan:\n" + format_plan(env, r.plan, 3);
    out.push_back(ex);
  }
  return out;
}

}  // namespace kinder
