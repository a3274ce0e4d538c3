#include "ceri/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ceri {

namespace {

std::string summarize(const std::string& source, const std::vector<ScenarioIssue>& issues) {
  std::ostringstream msg;
  msg << source;
  if (!issues.empty()) {
    const auto& first = issues.front();
    if (first.line > 0) msg << ":" << first.line << ":" << first.column;
    msg << ": " << (first.path.empty() ? "" : first.path + ": ") << first.message;
    if (issues.size() > 1) msg << " (+" << issues.size() - 1 << " more)";
  }
  return msg.str();
}

std::string escape_key(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

std::string child(const std::string& path, const std::string& key) { return path + "/" + escape_key(key); }
std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

// Start offset of every value in already-valid JSON text, keyed by JSON pointer.
class PositionIndex {
 public:
  explicit PositionIndex(const std::string& text) : text_(text) {
    std::size_t i = 0;
    skip_ws(i);
    if (i < text_.size()) value(i, "");
    for (std::size_t k = 0; k < text_.size(); ++k) {
      if (text_[k] == '\n') newlines_.push_back(k);
    }
  }

  /// Position of the deepest known ancestor of `path`.
  std::pair<int, int> locate(std::string path) const {
    while (true) {
      const auto it = offsets_.find(path);
      if (it != offsets_.end()) return line_col(it->second);
      if (path.empty()) return {0, 0};
      path.erase(path.rfind('/'));
    }
  }

  std::pair<int, int> line_col(std::size_t offset) const {
    const auto it = std::lower_bound(newlines_.begin(), newlines_.end(), offset);
    const int line = static_cast<int>(it - newlines_.begin()) + 1;
    const std::size_t start = it == newlines_.begin() ? 0 : *(it - 1) + 1;
    return {line, static_cast<int>(offset - start) + 1};
  }

 private:
  void skip_ws(std::size_t& i) const {
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
  }

  std::string string(std::size_t& i) const {
    std::string out;
    for (++i; i < text_.size() && text_[i] != '"'; ++i) {
      if (text_[i] == '\\') ++i;
      out += text_[i];
    }
    ++i;
    return out;
  }

  void value(std::size_t& i, const std::string& path) {
    offsets_[path] = i;
    const char c = text_[i];
    if (c == '{') {
      ++i;
      skip_ws(i);
      while (i < text_.size() && text_[i] != '}') {
        const std::string key = string(i);
        skip_ws(i);
        ++i;  // ':'
        skip_ws(i);
        value(i, child(path, key));
        skip_ws(i);
        if (text_[i] == ',') ++i;
        skip_ws(i);
      }
      ++i;
    } else if (c == '[') {
      ++i;
      skip_ws(i);
      for (std::size_t k = 0; i < text_.size() && text_[i] != ']'; ++k) {
        value(i, child(path, k));
        skip_ws(i);
        if (text_[i] == ',') ++i;
        skip_ws(i);
      }
      ++i;
    } else if (c == '"') {
      string(i);
    } else {
      while (i < text_.size() && !std::isspace(static_cast<unsigned char>(text_[i])) && text_[i] != ',' &&
             text_[i] != '}' && text_[i] != ']') {
        ++i;
      }
    }
  }

  const std::string& text_;
  std::map<std::string, std::size_t> offsets_;
  std::vector<std::size_t> newlines_;
};

class Reader {
 public:
  Reader(const PositionIndex& index) : index_(index) {}

  void fail(const std::string& path, const std::string& message) {
    const auto [line, column] = index_.locate(path);
    issues_.push_back({path, line, column, message});
  }

  const std::vector<ScenarioIssue>& issues() const { return issues_; }

  std::optional<double> number(const Json& v, const std::string& path, bool nonnegative = true) {
    if (!v.is_number()) {
      fail(path, "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (nonnegative && x < 0)) {
      fail(path, nonnegative ? "expected a finite nonnegative number" : "expected a finite number");
      return std::nullopt;
    }
    return x;
  }

  std::optional<long> integer(const Json& v, const std::string& path, long min) {
    if (!v.is_number_integer()) {
      fail(path, "expected an integer");
      return std::nullopt;
    }
    const long x = v.get<long>();
    if (x < min) {
      fail(path, "expected an integer >= " + std::to_string(min));
      return std::nullopt;
    }
    return x;
  }

  std::optional<BudgetPiece> piece(const Json& v, const std::string& path) {
    if (!v.is_object() || v.size() != 1) {
      fail(path, "expected exactly one of uniform, point");
      return std::nullopt;
    }
    if (v.contains("point")) {
      const auto x = number(v["point"], child(path, "point"));
      if (!x) return std::nullopt;
      return PointMass{*x};
    }
    if (v.contains("uniform")) {
      const Json& u = v["uniform"];
      const std::string p = child(path, "uniform");
      if (!u.is_array() || u.size() != 2) {
        fail(p, "expected [lo, hi]");
        return std::nullopt;
      }
      const auto lo = number(u[0], child(p, 0));
      const auto hi = number(u[1], child(p, 1));
      if (!lo || !hi) return std::nullopt;
      if (!(*lo < *hi)) {
        fail(p, "uniform needs lo < hi");
        return std::nullopt;
      }
      return UniformInterval{*lo, *hi};
    }
    fail(path, "unknown budget piece '" + v.begin().key() + "'");
    return std::nullopt;
  }

  std::optional<BudgetDistribution> budget(const Json& v, const std::string& path) {
    std::vector<BudgetComponent> components;
    if (v.is_object() && v.size() == 1 && v.contains("mixture")) {
      const Json& parts = v["mixture"];
      const std::string p = child(path, "mixture");
      if (!parts.is_array() || parts.empty()) {
        fail(p, "expected a nonempty list of {weight, piece}");
        return std::nullopt;
      }
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::string pk = child(p, k);
        if (!parts[k].is_object() || !parts[k].contains("weight") || !parts[k].contains("piece")) {
          fail(pk, "expected {weight, piece}");
          return std::nullopt;
        }
        const auto w = number(parts[k]["weight"], child(pk, "weight"));
        const auto pc = piece(parts[k]["piece"], child(pk, "piece"));
        if (!w || !pc) return std::nullopt;
        components.push_back({*w, *pc});
      }
    } else {
      const auto pc = piece(v, path);
      if (!pc) return std::nullopt;
      components.push_back({1.0, *pc});
    }
    try {
      return BudgetDistribution(std::move(components));
    } catch (const Error& err) {
      fail(path, err.what());
      return std::nullopt;
    }
  }

  std::optional<Bundle> bundle(const Json& v, const std::string& path, const std::map<std::string, int>& goods) {
    if (!v.is_object()) {
      fail(path, "expected a {good: count} object");
      return std::nullopt;
    }
    Bundle x = Bundle::Zero(static_cast<int>(goods.size()));
    bool ok = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      const auto g = goods.find(it.key());
      if (g == goods.end()) {
        fail(child(path, it.key()), "unknown good '" + it.key() + "'");
        ok = false;
        continue;
      }
      const auto count = integer(it.value(), child(path, it.key()), 1);
      if (!count) {
        ok = false;
        continue;
      }
      x[g->second] = static_cast<int>(*count);
    }
    if (!ok) return std::nullopt;
    return x;
  }

 private:
  const PositionIndex& index_;
  std::vector<ScenarioIssue> issues_;
};

const std::set<std::string> kKnownKeys = {"goods",  "agents",     "budgets",        "seed",
                                          "solver", "prices",     "allocation",     "implementation",
                                          "max_bundle_size"};

Scenario read(const Json& root, Reader& r) {
  Scenario s;
  if (!root.is_object()) {
    r.fail("", "expected a top-level object");
    return s;
  }
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (!kKnownKeys.count(it.key())) r.fail(child("", it.key()), "unknown key '" + it.key() + "'");
  }

  std::map<std::string, int> goods;
  std::vector<int> capacities;
  if (!root.contains("goods") || !root["goods"].is_array() || root["goods"].empty()) {
    r.fail("/goods", "expected a nonempty list of {name, capacity}");
  } else {
    const Json& list = root["goods"];
    for (std::size_t j = 0; j < list.size(); ++j) {
      const std::string p = child("/goods", j);
      const Json& g = list[j];
      if (!g.is_object() || !g.contains("name") || !g["name"].is_string() || !g.contains("capacity")) {
        r.fail(p, "expected {name, capacity}");
        continue;
      }
      const std::string name = g["name"].get<std::string>();
      if (name.empty() || goods.count(name)) {
        r.fail(child(p, "name"), name.empty() ? "empty good name" : "duplicate good '" + name + "'");
        continue;
      }
      const auto cap = r.integer(g["capacity"], child(p, "capacity"), 1);
      if (!cap) continue;
      goods[name] = static_cast<int>(s.economy.goods.size());
      s.economy.goods.push_back(name);
      capacities.push_back(static_cast<int>(*cap));
    }
  }
  s.economy.capacities = Eigen::Map<Eigen::VectorXi>(capacities.data(), static_cast<Eigen::Index>(capacities.size()));

  if (root.contains("max_bundle_size")) {
    if (const auto d = r.integer(root["max_bundle_size"], "/max_bundle_size", 1)) {
      s.economy.max_bundle_size = static_cast<int>(*d);
    }
  }

  if (!root.contains("agents") || !root["agents"].is_array() || root["agents"].empty()) {
    r.fail("/agents", "expected a nonempty list of {name, ranked_bundles}");
  } else {
    const Json& list = root["agents"];
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = child("/agents", i);
      const Json& a = list[i];
      AgentPreference agent;
      if (!a.is_object() || !a.contains("name") || !a["name"].is_string() || !a.contains("ranked_bundles") ||
          !a["ranked_bundles"].is_array()) {
        r.fail(p, "expected {name, ranked_bundles}");
        s.economy.agents.push_back(agent);
        continue;
      }
      agent.name = a["name"].get<std::string>();
      if (!names.insert(agent.name).second) r.fail(child(p, "name"), "duplicate agent '" + agent.name + "'");
      const Json& ranked = a["ranked_bundles"];
      for (std::size_t k = 0; k < ranked.size(); ++k) {
        const std::string pk = child(child(p, "ranked_bundles"), k);
        const auto x = r.bundle(ranked[k], pk, goods);
        if (!x) continue;
        if (bundle_size(*x) == 0) {
          r.fail(pk, "the empty bundle is implicitly ranked last");
          continue;
        }
        if (agent.rank_of(*x)) {
          r.fail(pk, "bundle listed twice");
          continue;
        }
        if (s.economy.max_bundle_size && bundle_size(*x) > *s.economy.max_bundle_size) {
          r.fail(pk, "bundle exceeds max_bundle_size");
        }
        agent.ranked.push_back(*x);
      }
      s.economy.agents.push_back(std::move(agent));
    }
  }
  const int n = s.economy.num_agents();

  if (root.contains("budgets")) {
    const Json& b = root["budgets"];
    if (b.is_object() && b.size() == 1 && b.contains("identical")) {
      if (const auto d = r.budget(b["identical"], "/budgets/identical")) s.budgets.assign(n, *d);
    } else if (b.is_array()) {
      if (static_cast<int>(b.size()) != n) r.fail("/budgets", "expected one budget per agent");
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (const auto d = r.budget(b[i], child("/budgets", i))) s.budgets.push_back(*d);
      }
    } else {
      r.fail("/budgets", "expected a list of budget specs or {\"identical\": spec}");
    }
  }

  if (root.contains("seed")) {
    const Json& v = root["seed"];
    if (!v.is_number_unsigned()) {
      r.fail("/seed", "expected an unsigned 64-bit integer");
    } else {
      s.seed = v.get<std::uint64_t>();
    }
  }

  if (root.contains("solver")) {
    const Json& v = root["solver"];
    if (!v.is_object()) {
      r.fail("/solver", "expected an object");
    } else {
      for (auto it = v.begin(); it != v.end(); ++it) {
        const std::string p = child("/solver", it.key());
        if (it.key() == "tol") {
          s.solver.tol = r.number(it.value(), p);
        } else if (it.key() == "max_iters") {
          if (const auto k = r.integer(it.value(), p, 1)) s.solver.max_iters = static_cast<int>(*k);
        } else if (it.key() == "restarts") {
          if (const auto k = r.integer(it.value(), p, 1)) s.solver.restarts = static_cast<int>(*k);
        } else if (it.key() == "damping") {
          s.solver.damping = r.number(it.value(), p);
        } else {
          r.fail(p, "unknown solver setting '" + it.key() + "'");
        }
      }
    }
  }

  if (root.contains("prices")) {
    const Json& v = root["prices"];
    if (!v.is_object()) {
      r.fail("/prices", "expected {good: price}");
    } else {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(s.economy.num_goods());
      for (auto it = v.begin(); it != v.end(); ++it) {
        const auto g = goods.find(it.key());
        if (g == goods.end()) {
          r.fail(child("/prices", it.key()), "unknown good '" + it.key() + "'");
        } else if (const auto x = r.number(it.value(), child("/prices", it.key()))) {
          p[g->second] = *x;
        }
      }
      s.prices = p;
    }
  }

  if (root.contains("allocation")) {
    const Json& v = root["allocation"];
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
      r.fail("/allocation", "expected one lottery per agent");
    } else {
      LotteryAllocation alloc;
      for (int i = 0; i < n; ++i) {
        const std::string p = child("/allocation", static_cast<std::size_t>(i));
        const AgentPreference& agent = s.economy.agents[i];
        Lottery l = Lottery::Zero(agent.outcomes());
        if (!v[i].is_array()) {
          r.fail(p, "expected a list of {bundle, prob}");
        } else {
          for (std::size_t k = 0; k < v[i].size(); ++k) {
            const std::string pk = child(p, k);
            const Json& entry = v[i][k];
            if (!entry.is_object() || !entry.contains("bundle") || !entry.contains("prob")) {
              r.fail(pk, "expected {bundle, prob}");
              continue;
            }
            const auto x = r.bundle(entry["bundle"], child(pk, "bundle"), goods);
            const auto prob = r.number(entry["prob"], child(pk, "prob"));
            if (!x || !prob) continue;
            const auto rank = agent.rank_of(*x);
            if (!rank) {
              r.fail(child(pk, "bundle"), "bundle is not acceptable to " + agent.name);
              continue;
            }
            l[*rank] += *prob;
          }
        }
        alloc.push_back(std::move(l));
      }
      for (const auto& violation : validate_allocation(s.economy, alloc)) {
        r.fail("/allocation", violation.kind + ": " + violation.detail);
      }
      s.allocation = std::move(alloc);
    }
  }

  if (root.contains("implementation")) {
    const Json& v = root["implementation"];
    if (!v.is_object() || !v.contains("atoms") || !v["atoms"].is_array()) {
      r.fail("/implementation", "expected {atoms: [...]}");
    } else {
      std::vector<Atom> atoms;
      const Json& list = v["atoms"];
      for (std::size_t t = 0; t < list.size(); ++t) {
        const std::string p = child("/implementation/atoms", t);
        const Json& a = list[t];
        if (!a.is_object() || !a.contains("weight") || !a.contains("bundles") || !a.contains("budgets") ||
            !a["bundles"].is_array() || !a["budgets"].is_array() || static_cast<int>(a["bundles"].size()) != n ||
            static_cast<int>(a["budgets"].size()) != n) {
          r.fail(p, "expected {weight, bundles, budgets} with one entry per agent");
          continue;
        }
        Atom atom;
        if (const auto w = r.number(a["weight"], child(p, "weight"))) atom.weight = *w;
        for (int i = 0; i < n; ++i) {
          const std::string pb = child(child(p, "bundles"), static_cast<std::size_t>(i));
          const auto x = r.bundle(a["bundles"][i], pb, goods);
          const auto rank = x ? s.economy.agents[i].rank_of(*x) : std::nullopt;
          if (x && !rank) r.fail(pb, "bundle is not acceptable to " + s.economy.agents[i].name);
          atom.allocation.push_back(rank ? *rank : 0);
          const auto b = r.number(a["budgets"][i], child(child(p, "budgets"), static_cast<std::size_t>(i)));
          atom.budgets.push_back(b ? *b : 0.0);
        }
        atoms.push_back(std::move(atom));
      }
      s.atoms = std::move(atoms);
      if (!s.prices) r.fail("/implementation", "an implementation needs prices");
    }
  }
  return s;
}

}  // namespace

ScenarioError::ScenarioError(ErrorCode code, std::string source, std::vector<ScenarioIssue> issues)
    : Error(code, summarize(source, issues)), source_(std::move(source)), issues_(std::move(issues)) {}

SolverConfig SolverOverrides::apply(SolverConfig config) const {
  if (tol) {
    config.tol_clearing = *tol;
    config.tol_slackness = *tol;
  }
  if (max_iters) config.max_iters = *max_iters;
  if (restarts) config.restarts = *restarts;
  if (damping) config.damping = *damping;
  return config;
}

Scenario parse_scenario_text(const std::string& text, const std::string& source) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& err) {
    // err.byte is one past the offending character.
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k + 1 < err.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string message = err.what();
    if (const auto cut = message.find("; "); cut != std::string::npos) message = message.substr(cut + 2);
    throw ScenarioError(ErrorCode::kParseError, source,
                        {{"", static_cast<int>(line), static_cast<int>(column), message}});
  }
  const PositionIndex index(text);
  Reader reader(index);
  Scenario s = read(root, reader);
  if (!reader.issues().empty()) throw ScenarioError(ErrorCode::kValidationError, source, reader.issues());
  return s;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ErrorCode::kParseError, path, {{"", 0, 0, "cannot open file"}});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path);
}

Json budget_to_json(const BudgetDistribution& b) {
  auto piece = [](const BudgetPiece& p) {
    Json out = Json::object();
    if (const auto* point = std::get_if<PointMass>(&p)) {
      out["point"] = point->value;
    } else {
      const auto& u = std::get<UniformInterval>(p);
      out["uniform"] = {u.lo, u.hi};
    }
    return out;
  };
  if (b.components().size() == 1) return piece(b.components().front().piece);
  Json parts = Json::array();
  for (const auto& c : b.components()) parts.push_back(Json{{"weight", c.weight}, {"piece", piece(c.piece)}});
  return Json{{"mixture", parts}};
}

Json bundle_to_json(const Economy& e, const Bundle& x) {
  Json out = Json::object();
  for (int j = 0; j < e.num_goods(); ++j) {
    if (x[j] != 0) out[e.good_name(j)] = x[j];
  }
  return out;
}

Json prices_to_json(const Economy& e, const Eigen::VectorXd& prices) {
  Json out = Json::object();
  for (int j = 0; j < e.num_goods(); ++j) out[e.good_name(j)] = prices[j];
  return out;
}

Json scenario_to_json(const Scenario& s) {
  const Economy& e = s.economy;
  Json root = Json::object();
  Json goods = Json::array();
  for (int j = 0; j < e.num_goods(); ++j) goods.push_back(Json{{"name", e.good_name(j)}, {"capacity", e.capacities[j]}});
  root["goods"] = goods;
  if (e.max_bundle_size) root["max_bundle_size"] = *e.max_bundle_size;
  Json agents = Json::array();
  for (const auto& agent : e.agents) {
    Json ranked = Json::array();
    for (const auto& x : agent.ranked) ranked.push_back(bundle_to_json(e, x));
    agents.push_back(Json{{"name", agent.name}, {"ranked_bundles", ranked}});
  }
  root["agents"] = agents;
  if (!s.budgets.empty()) {
    const bool identical =
        std::all_of(s.budgets.begin(), s.budgets.end(), [&](const auto& b) { return b == s.budgets.front(); });
    if (identical) {
      root["budgets"] = Json{{"identical", budget_to_json(s.budgets.front())}};
    } else {
      Json list = Json::array();
      for (const auto& b : s.budgets) list.push_back(budget_to_json(b));
      root["budgets"] = list;
    }
  }
  if (s.seed) root["seed"] = *s.seed;
  if (!s.solver.empty()) {
    Json solver = Json::object();
    if (s.solver.tol) solver["tol"] = *s.solver.tol;
    if (s.solver.max_iters) solver["max_iters"] = *s.solver.max_iters;
    if (s.solver.restarts) solver["restarts"] = *s.solver.restarts;
    if (s.solver.damping) solver["damping"] = *s.solver.damping;
    root["solver"] = solver;
  }
  if (s.prices) root["prices"] = prices_to_json(e, *s.prices);
  if (s.allocation) {
    Json alloc = Json::array();
    for (int i = 0; i < e.num_agents(); ++i) {
      Json lottery = Json::array();
      const Lottery& l = (*s.allocation)[i];
      for (int k = 0; k < l.size(); ++k) {
        if (l[k] != 0.0) lottery.push_back(Json{{"bundle", bundle_to_json(e, e.bundle_of(i, k))}, {"prob", l[k]}});
      }
      alloc.push_back(lottery);
    }
    root["allocation"] = alloc;
  }
  if (s.atoms) {
    Json atoms = Json::array();
    for (const auto& atom : *s.atoms) {
      Json bundles = Json::array();
      for (int i = 0; i < e.num_agents(); ++i) bundles.push_back(bundle_to_json(e, e.bundle_of(i, atom.allocation[i])));
      atoms.push_back(Json{{"weight", atom.weight}, {"bundles", bundles}, {"budgets", atom.budgets}});
    }
    root["implementation"] = Json{{"atoms", atoms}};
  }
  return root;
}

std::string emit_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

ExPostImplementation implementation_of(const Scenario& s) {
  if (!s.atoms || !s.prices) throw Error(ErrorCode::kInvalidInput, "scenario carries no implementation");
  ExPostImplementation impl;
  impl.atoms = *s.atoms;
  impl.prices = *s.prices;
  impl.slack_bound = std::max(0, s.economy.delta() - 1);
  return impl;
}

}  // namespace ceri
