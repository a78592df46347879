#include "kinder/taskplan.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "kinder/rng.hpp"

namespace kinder::plan {

std::string Atom::str() const {
  std::string out = "(" + pred;
  for (const auto& a : args) out += " " + a;
  return out + ")";
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

}  // namespace

ParseError::ParseError(int line_, int column_, std::vector<std::string> expected_, const std::string& found)
    : KinderError("parse error at " + std::to_string(line_) + ":" + std::to_string(column_) + ": expected " +
                  join(expected_) + ", found " + found),
      line(line_),
      column(column_),
      expected(std::move(expected_)) {}

bool Domain::is_subtype(std::string_view child, std::string_view ancestor) const {
  std::string cur(child);
  for (std::size_t guard = 0; guard <= types.size() + 1; ++guard) {
    if (cur == ancestor) return true;
    if (cur == "object") return false;
    auto it = std::find_if(types.begin(), types.end(), [&](const TypeDecl& t) { return t.name == cur; });
    if (it == types.end()) return ancestor == "object";
    cur = it->parent;
  }
  return false;
}

const OperatorSchema* Domain::find_operator(std::string_view name) const {
  for (const auto& op : operators) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

// ---------------------------------------------------------------- reader

namespace {

struct Token {
  enum Kind { Open, Close, Symbol, End } kind;
  std::string text;
  int line;
  int column;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](char c) {
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == ';') {
      while (i < text.size() && text[i] != '\n') {
        advance(text[i]);
        ++i;
      }
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(c);
      ++i;
      continue;
    }
    if (c == '(' || c == ')') {
      out.push_back({c == '(' ? Token::Open : Token::Close, std::string(1, c), line, col});
      advance(c);
      ++i;
      continue;
    }
    const int l0 = line, c0 = col;
    std::string sym;
    while (i < text.size()) {
      const char d = text[i];
      if (d == '(' || d == ')' || d == ';' || d == ' ' || d == '\t' || d == '\r' || d == '\n') break;
      sym += d;
      advance(d);
      ++i;
    }
    out.push_back({Token::Symbol, std::move(sym), l0, c0});
  }
  out.push_back({Token::End, "end of input", line, col});
  return out;
}

class Reader {
 public:
  explicit Reader(std::string_view text) : toks_(tokenize(text)) {}

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token take() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    throw ParseError(t.line, t.column, std::move(expected), t.kind == Token::End ? t.text : "'" + t.text + "'");
  }

  void open() {
    if (peek().kind != Token::Open) fail({"'('"});
    take();
  }
  void close() {
    if (peek().kind != Token::Close) fail({"')'"});
    take();
  }
  std::string symbol(const std::string& what) {
    if (peek().kind != Token::Symbol) fail({what});
    return take().text;
  }
  void keyword(const std::string& kw) {
    if (peek().kind != Token::Symbol || peek().text != kw) fail({"'" + kw + "'"});
    take();
  }
  bool at_keyword(const std::string& kw) const { return peek().kind == Token::Symbol && peek().text == kw; }
  bool at_section(const std::string& kw) const {
    return peek().kind == Token::Open && peek(1).kind == Token::Symbol && peek(1).text == kw;
  }
  void finish() {
    if (peek().kind != Token::End) fail({"end of input"});
  }

  // Names optionally followed by "- type"; untyped names default to `dflt`.
  std::vector<TypedName> typed_list(const std::string& what, const std::string& dflt) {
    std::vector<TypedName> out;
    std::size_t pending = 0;
    while (peek().kind == Token::Symbol) {
      if (peek().text == "-") {
        take();
        if (pending == 0) fail({what});
        const std::string type = symbol("type name");
        for (std::size_t k = out.size() - pending; k < out.size(); ++k) out[k].type = type;
        pending = 0;
        continue;
      }
      out.push_back({take().text, dflt});
      ++pending;
    }
    return out;
  }

  Atom atom(const std::string& what) {
    open();
    Atom a;
    if (peek().kind != Token::Symbol || peek().text == "and" || peek().text == "not") fail({what});
    a.pred = take().text;
    if (!a.pred.empty() && a.pred[0] == ':') {
      --pos_;
      fail({what});
    }
    while (peek().kind == Token::Symbol) a.args.push_back(take().text);
    close();
    return a;
  }

  // "(and atom*)" or a single atom.
  std::vector<Atom> conjunction() {
    if (peek().kind == Token::Open && peek(1).kind == Token::Symbol && peek(1).text == "and") {
      take();
      take();
      std::vector<Atom> out;
      while (peek().kind != Token::Close) {
        if (peek().kind != Token::Open) fail({"atom", "')'"});
        out.push_back(atom("predicate name"));
      }
      close();
      return out;
    }
    return {atom("'and' or predicate name")};
  }

  void effect(std::vector<Atom>& add, std::vector<Atom>& del) {
    auto literal = [&] {
      if (peek().kind == Token::Open && peek(1).kind == Token::Symbol && peek(1).text == "not") {
        take();
        take();
        del.push_back(atom("predicate name"));
        close();
      } else {
        add.push_back(atom("predicate name or 'not'"));
      }
    };
    if (peek().kind == Token::Open && peek(1).kind == Token::Symbol && peek(1).text == "and") {
      take();
      take();
      while (peek().kind != Token::Close) {
        if (peek().kind != Token::Open) fail({"literal", "')'"});
        literal();
      }
      close();
      return;
    }
    literal();
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void check_declared_types(const Domain& d, const std::vector<TypedName>& names) {
  for (const auto& n : names) {
    if (n.type == "object") continue;
    if (std::none_of(d.types.begin(), d.types.end(), [&](const TypeDecl& t) { return t.name == n.type; })) {
      throw KinderError("undeclared type '" + n.type + "' for " + n.name);
    }
  }
}

}  // namespace

Domain parse_domain(std::string_view text) {
  Reader r(text);
  Domain d;
  r.open();
  r.keyword("define");
  r.open();
  r.keyword("domain");
  d.name = r.symbol("domain name");
  r.close();
  if (r.at_section(":requirements")) {
    r.open();
    r.take();
    while (r.peek().kind == Token::Symbol) r.take();
    r.close();
  }
  if (r.at_section(":types")) {
    r.open();
    r.take();
    for (const auto& t : r.typed_list("type name", "object")) d.types.push_back({t.name, t.type});
    r.close();
  }
  if (r.at_section(":constants")) {
    r.open();
    r.take();
    d.constants = r.typed_list("constant name", "object");
    r.close();
  }
  if (r.at_section(":predicates")) {
    r.open();
    r.take();
    while (r.peek().kind == Token::Open) {
      r.open();
      PredicateSig p;
      p.name = r.symbol("predicate name");
      p.params = r.typed_list("parameter", "object");
      r.close();
      d.predicates.push_back(std::move(p));
    }
    r.close();
  }
  while (r.at_section(":action")) {
    r.open();
    r.take();
    OperatorSchema op;
    op.name = r.symbol("action name");
    r.keyword(":parameters");
    r.open();
    op.params = r.typed_list("parameter", "object");
    r.close();
    if (r.at_keyword(":precondition")) {
      r.take();
      op.pre = r.conjunction();
    }
    r.keyword(":effect");
    r.effect(op.add, op.del);
    r.close();
    d.operators.push_back(std::move(op));
  }
  if (r.peek().kind != Token::Close) r.fail({"'(:action'", "')'"});
  r.close();
  r.finish();
  validate(d);
  return d;
}

Problem parse_problem(std::string_view text, const Domain& domain) {
  Reader r(text);
  Problem p;
  r.open();
  r.keyword("define");
  r.open();
  r.keyword("problem");
  p.name = r.symbol("problem name");
  r.close();
  r.open();
  r.keyword(":domain");
  p.domain = r.symbol("domain name");
  r.close();
  if (p.domain != domain.name) throw KinderError("problem is for domain '" + p.domain + "', not '" + domain.name + "'");
  if (r.at_section(":objects")) {
    r.open();
    r.take();
    p.objects = r.typed_list("object name", "object");
    r.close();
  }
  r.open();
  r.keyword(":init");
  while (r.peek().kind == Token::Open) p.init.push_back(r.atom("predicate name"));
  r.close();
  r.open();
  r.keyword(":goal");
  p.goal = r.conjunction();
  r.close();
  r.close();
  r.finish();
  check_declared_types(domain, p.objects);
  return p;
}

void validate(const Domain& d) {
  check_declared_types(d, d.constants);
  for (const auto& t : d.types) {
    if (t.parent != "object" &&
        std::none_of(d.types.begin(), d.types.end(), [&](const TypeDecl& u) { return u.name == t.parent; })) {
      throw KinderError("undeclared parent type '" + t.parent + "'");
    }
  }
  auto pred_arity = [&](const std::string& name) -> std::optional<std::size_t> {
    for (const auto& p : d.predicates) {
      if (p.name == name) return p.params.size();
    }
    return std::nullopt;
  };
  for (const auto& op : d.operators) {
    check_declared_types(d, op.params);
    auto check = [&](const Atom& a) {
      const auto n = pred_arity(a.pred);
      if (!n) throw KinderError("operator " + op.name + " uses undeclared predicate " + a.pred);
      if (*n != a.args.size()) throw KinderError("operator " + op.name + ": wrong arity for " + a.pred);
      for (const auto& arg : a.args) {
        const bool param = std::any_of(op.params.begin(), op.params.end(), [&](const TypedName& t) { return t.name == arg; });
        const bool constant =
            std::any_of(d.constants.begin(), d.constants.end(), [&](const TypedName& t) { return t.name == arg; });
        if (!param && !constant) throw KinderError("operator " + op.name + ": unknown argument " + arg);
      }
    };
    for (const auto& a : op.pre) check(a);
    for (const auto& a : op.add) check(a);
    for (const auto& a : op.del) check(a);
    for (const auto& a : op.add) {
      if (std::find(op.del.begin(), op.del.end(), a) != op.del.end()) {
        throw KinderError("operator " + op.name + " adds and deletes " + a.str());
      }
    }
  }
}

// ---------------------------------------------------------------- writer

namespace {

template <class T, class Name, class Group>
std::string grouped(const std::vector<T>& items, Name name, Group group) {
  std::string out;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    std::string line;
    while (j < items.size() && group(items[j]) == group(items[i])) {
      line += (j > i ? " " : "") + name(items[j]);
      ++j;
    }
    out += "\n    " + line + " - " + group(items[i]);
    i = j;
  }
  return out;
}

std::string params_str(const std::vector<TypedName>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) out += (i ? " " : "") + ps[i].name + " - " + ps[i].type;
  return out;
}

std::string and_str(const std::vector<Atom>& atoms) {
  std::string out = "(and";
  for (const auto& a : atoms) out += " " + a.str();
  return out + ")";
}

}  // namespace

std::string serialize(const Domain& d) {
  std::string out = "(define (domain " + d.name + ")\n  (:requirements :strips :typing)";
  if (!d.types.empty()) {
    out += "\n  (:types" +
           grouped(d.types, [](const TypeDecl& t) { return t.name; }, [](const TypeDecl& t) { return t.parent; }) + ")";
  }
  if (!d.constants.empty()) {
    out += "\n  (:constants" +
           grouped(d.constants, [](const TypedName& t) { return t.name; }, [](const TypedName& t) { return t.type; }) +
           ")";
  }
  out += "\n  (:predicates";
  for (const auto& p : d.predicates) {
    out += "\n    (" + p.name + (p.params.empty() ? "" : " " + params_str(p.params)) + ")";
  }
  out += ")";
  for (const auto& op : d.operators) {
    out += "\n  (:action " + op.name;
    out += "\n    :parameters (" + params_str(op.params) + ")";
    out += "\n    :precondition " + and_str(op.pre);
    out += "\n    :effect (and";
    for (const auto& a : op.add) out += " " + a.str();
    for (const auto& a : op.del) out += " (not " + a.str() + ")";
    out += "))";
  }
  out += ")\n";
  return out;
}

std::string serialize(const Problem& p) {
  std::string out = "(define (problem " + p.name + ")\n  (:domain " + p.domain + ")";
  if (!p.objects.empty()) {
    out += "\n  (:objects" +
           grouped(p.objects, [](const TypedName& t) { return t.name; }, [](const TypedName& t) { return t.type; }) + ")";
  }
  out += "\n  (:init";
  for (const auto& a : p.init) out += "\n    " + a.str();
  out += ")\n  (:goal " + and_str(p.goal) + "))\n";
  return out;
}

// ---------------------------------------------------------------- grounding

std::optional<int> GroundProblem::atom_index(const Atom& a) const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i] == a) return static_cast<int>(i);
  }
  return std::nullopt;
}

GroundProblem ground(const Domain& d, const Problem& p) {
  std::vector<TypedName> objects = d.constants;
  for (const auto& o : p.objects) {
    if (std::none_of(objects.begin(), objects.end(), [&](const TypedName& t) { return t.name == o.name; })) {
      objects.push_back(o);
    }
  }

  GroundProblem gp;
  std::map<Atom, int> index;
  auto intern = [&](const Atom& a) {
    auto [it, fresh] = index.emplace(a, static_cast<int>(gp.atoms.size()));
    if (fresh) gp.atoms.push_back(a);
    return it->second;
  };
  for (const auto& a : p.init) gp.init.push_back(intern(a));
  for (const auto& a : p.goal) gp.goal.push_back(intern(a));

  std::vector<GroundOperator> all;
  for (std::size_t si = 0; si < d.operators.size(); ++si) {
    const auto& op = d.operators[si];
    std::vector<std::vector<const TypedName*>> choices;
    bool empty = false;
    for (const auto& param : op.params) {
      std::vector<const TypedName*> c;
      for (const auto& o : objects) {
        if (d.is_subtype(o.type, param.type)) c.push_back(&o);
      }
      empty = empty || c.empty();
      choices.push_back(std::move(c));
    }
    if (empty) continue;
    std::vector<std::size_t> idx(op.params.size(), 0);
    while (true) {
      GroundOperator g;
      g.schema = si;
      for (std::size_t k = 0; k < idx.size(); ++k) g.args.push_back(choices[k][idx[k]]->name);
      auto bind = [&](const Atom& a) {
        Atom out{a.pred, {}};
        for (const auto& arg : a.args) {
          std::string v = arg;
          for (std::size_t k = 0; k < op.params.size(); ++k) {
            if (op.params[k].name == arg) v = g.args[k];
          }
          out.args.push_back(std::move(v));
        }
        return intern(out);
      };
      for (const auto& a : op.pre) g.pre.push_back(bind(a));
      for (const auto& a : op.add) g.add.push_back(bind(a));
      for (const auto& a : op.del) g.del.push_back(bind(a));
      g.name = "(" + op.name;
      for (const auto& a : g.args) g.name += " " + a;
      g.name += ")";
      all.push_back(std::move(g));

      std::size_t k = idx.size();
      while (k > 0) {
        --k;
        if (++idx[k] < choices[k].size()) break;
        idx[k] = 0;
        if (k == 0) {
          k = idx.size() + 1;
          break;
        }
      }
      if (idx.empty() || k == idx.size() + 1) break;
    }
  }

  std::vector<bool> reachable(gp.atoms.size(), false);
  for (int a : gp.init) reachable[static_cast<std::size_t>(a)] = true;
  for (const auto& g : all) {
    for (int a : g.add) reachable[static_cast<std::size_t>(a)] = true;
  }
  for (auto& g : all) {
    if (std::all_of(g.pre.begin(), g.pre.end(), [&](int a) { return reachable[static_cast<std::size_t>(a)]; })) {
      gp.ops.push_back(std::move(g));
    }
  }
  return gp;
}

StateBits make_state(std::size_t n_atoms, const std::vector<int>& atoms) {
  StateBits s((n_atoms + 63) / 64 + 1, 0);
  for (int a : atoms) set_bit(s, a);
  return s;
}

bool holds_all(const StateBits& s, const std::vector<int>& atoms) {
  return std::all_of(atoms.begin(), atoms.end(), [&](int a) { return test_bit(s, a); });
}

bool applicable(const StateBits& s, const GroundOperator& op) { return holds_all(s, op.pre); }

StateBits apply_op(const StateBits& s, const GroundOperator& op) {
  StateBits out = s;
  for (int a : op.del) clear_bit(out, a);
  for (int a : op.add) set_bit(out, a);
  return out;
}

// ---------------------------------------------------------------- hff

std::optional<std::vector<int>> relaxed_plan(const StateBits& s, const std::vector<int>& goal, const GroundProblem& gp) {
  const std::size_t n = gp.atoms.size();
  std::vector<int> fact_level(n, kInfinity);
  std::vector<int> op_level(gp.ops.size(), kInfinity);
  std::vector<int> missing(gp.ops.size());
  std::vector<std::vector<int>> consumers(n);
  for (std::size_t i = 0; i < gp.ops.size(); ++i) {
    missing[i] = static_cast<int>(gp.ops[i].pre.size());
    for (int a : gp.ops[i].pre) consumers[static_cast<std::size_t>(a)].push_back(static_cast<int>(i));
  }

  std::vector<int> frontier;
  for (std::size_t a = 0; a < n; ++a) {
    if (test_bit(s, static_cast<int>(a))) {
      fact_level[a] = 0;
      frontier.push_back(static_cast<int>(a));
    }
  }
  std::vector<int> ready;
  for (std::size_t i = 0; i < gp.ops.size(); ++i) {
    if (missing[i] == 0) ready.push_back(static_cast<int>(i));
  }
  auto goal_reached = [&] {
    return std::all_of(goal.begin(), goal.end(), [&](int g) { return fact_level[static_cast<std::size_t>(g)] != kInfinity; });
  };

  int layer = 0;
  while (!goal_reached()) {
    for (int f : frontier) {
      for (int o : consumers[static_cast<std::size_t>(f)]) {
        if (--missing[static_cast<std::size_t>(o)] == 0) ready.push_back(o);
      }
    }
    frontier.clear();
    for (int o : ready) {
      op_level[static_cast<std::size_t>(o)] = layer;
      for (int a : gp.ops[static_cast<std::size_t>(o)].add) {
        if (fact_level[static_cast<std::size_t>(a)] == kInfinity) {
          fact_level[static_cast<std::size_t>(a)] = layer + 1;
          frontier.push_back(a);
        }
      }
    }
    ready.clear();
    if (frontier.empty()) return std::nullopt;
    ++layer;
  }

  // Backward extraction.
  int top = 0;
  for (int g : goal) top = std::max(top, fact_level[static_cast<std::size_t>(g)]);
  std::vector<std::vector<int>> agenda(static_cast<std::size_t>(top) + 1);
  std::vector<bool> queued(n, false);
  for (int g : goal) {
    if (!queued[static_cast<std::size_t>(g)]) {
      queued[static_cast<std::size_t>(g)] = true;
      agenda[static_cast<std::size_t>(fact_level[static_cast<std::size_t>(g)])].push_back(g);
    }
  }
  std::vector<bool> chosen(gp.ops.size(), false);
  std::vector<int> plan;
  for (int l = top; l > 0; --l) {
    for (std::size_t k = 0; k < agenda[static_cast<std::size_t>(l)].size(); ++k) {
      const int f = agenda[static_cast<std::size_t>(l)][k];
      int best = -1;
      for (std::size_t o = 0; o < gp.ops.size(); ++o) {
        if (op_level[o] != l - 1) continue;
        const auto& add = gp.ops[o].add;
        if (std::find(add.begin(), add.end(), f) == add.end()) continue;
        if (best < 0 || gp.ops[o].name < gp.ops[static_cast<std::size_t>(best)].name) best = static_cast<int>(o);
      }
      if (chosen[static_cast<std::size_t>(best)]) continue;
      chosen[static_cast<std::size_t>(best)] = true;
      plan.push_back(best);
      for (int p : gp.ops[static_cast<std::size_t>(best)].pre) {
        const int pl = fact_level[static_cast<std::size_t>(p)];
        if (pl > 0 && !queued[static_cast<std::size_t>(p)]) {
          queued[static_cast<std::size_t>(p)] = true;
          agenda[static_cast<std::size_t>(pl)].push_back(p);
        }
      }
    }
  }
  std::stable_sort(plan.begin(), plan.end(), [&](int a, int b) {
    return op_level[static_cast<std::size_t>(a)] < op_level[static_cast<std::size_t>(b)];
  });
  return plan;
}

int hff(const StateBits& s, const std::vector<int>& goal, const GroundProblem& gp) {
  if (holds_all(s, goal)) return 0;
  const auto plan = relaxed_plan(s, goal, gp);
  return plan ? static_cast<int>(plan->size()) : kInfinity;
}

// ---------------------------------------------------------------- GBFS

std::size_t PlanStream::BitsHash::operator()(const StateBits& s) const {
  std::uint64_t h = 1469598103934665603ull;
  for (auto w : s) {
    h ^= w;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

PlanStream::PlanStream(const GroundProblem& gp, std::size_t max_plans, std::chrono::duration<double> deadline)
    : gp_(gp),
      max_plans_(max_plans),
      deadline_(std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(deadline)) {
  if (max_plans_ == 0) throw KinderError("max_plans must be at least 1");
  StateBits init = make_state(gp.atoms.size(), gp.init);
  seen_.insert(init);
  push(std::move(init), -1, -1);
}

void PlanStream::push(StateBits state, int parent, int op) {
  auto it = h_cache_.find(state);
  if (it == h_cache_.end()) it = h_cache_.emplace(state, hff(state, gp_.goal, gp_)).first;
  const int h = it->second;
  if (h == kInfinity) return;
  nodes_.push_back({std::move(state), parent, op});
  open_.push_back({h, counter_++, static_cast<int>(nodes_.size()) - 1});
  std::push_heap(open_.begin(), open_.end(), EntryCmp{});
  ++stats_.generated;
}

std::optional<AbstractPlan> PlanStream::next() {
  while (!done_ && !open_.empty()) {
    if (std::chrono::steady_clock::now() >= deadline_) {
      stats_.timed_out = true;
      done_ = true;
      break;
    }
    std::pop_heap(open_.begin(), open_.end(), EntryCmp{});
    const Entry e = open_.back();
    open_.pop_back();
    const int ni = e.node;

    if (holds_all(nodes_[static_cast<std::size_t>(ni)].state, gp_.goal)) {
      AbstractPlan plan;
      for (int k = ni; nodes_[static_cast<std::size_t>(k)].parent >= 0; k = nodes_[static_cast<std::size_t>(k)].parent) {
        plan.ops.push_back(nodes_[static_cast<std::size_t>(k)].op);
      }
      std::reverse(plan.ops.begin(), plan.ops.end());
      std::vector<std::uint64_t> key(plan.ops.begin(), plan.ops.end());
      key.push_back(plan.ops.size());
      const std::uint64_t h = fnv64(std::string_view(reinterpret_cast<const char*>(key.data()), key.size() * 8));
      if (!emitted_.insert(h).second) continue;
      ++stats_.plans;
      if (stats_.plans >= max_plans_) done_ = true;
      return plan;
    }

    ++stats_.expanded;
    for (std::size_t o = 0; o < gp_.ops.size(); ++o) {
      const auto& op = gp_.ops[o];
      if (!applicable(nodes_[static_cast<std::size_t>(ni)].state, op)) continue;
      StateBits child = apply_op(nodes_[static_cast<std::size_t>(ni)].state, op);
      // Closed on generation until the first plan; afterwards revisits are
      // allowed so later plans can differ from the first.
      if (stats_.plans == 0 && !holds_all(child, gp_.goal) && !seen_.insert(child).second) continue;
      push(std::move(child), ni, static_cast<int>(o));
    }
  }
  done_ = true;
  return std::nullopt;
}

}  // namespace kinder::plan
