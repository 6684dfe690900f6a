#include <json.hpp>
#include <sstream>

#include "mdimkit/systems.hpp"

namespace mdimkit {
namespace {

using ojson = nlohmann::ordered_json;

void expect_keys(const ojson& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error("system spec: unknown key '" + key + "'");
  }
}

ojson pattern_to_json(const Pattern& p) {
  ojson o = ojson::object();
  for (const auto& [off, s] : p) o[offset_key(off)] = s;
  return o;
}

Pattern pattern_from_json(const ojson& j, int k) {
  if (!j.is_object()) throw Error("system spec: pattern must be an object");
  Pattern p;
  for (const auto& [key, value] : j.items()) p[parse_offset_key(key, k)] = value.get<int>();
  return p;
}

ojson to_json(const SystemSpec& s) {
  ojson j;
  j["k"] = s.k;
  j["kind"] = s.kind;
  if (s.kind == "full" || s.kind == "sft") {
    if (s.alphabet > 0) j["alphabet"] = s.alphabet;
    if (s.cube_D > 0) j["cube_D"] = s.cube_D;
  }
  if (s.kind == "sft") {
    ojson f = ojson::array();
    for (const auto& p : s.forbidden) f.push_back(pattern_to_json(p));
    j["forbidden"] = f;
  }
  if (s.kind == "product") {
    ojson c = ojson::array();
    for (const auto& comp : s.components) c.push_back(to_json(comp));
    j["components"] = c;
  }
  if (s.kind == "factor") {
    if (!s.base || !s.block_code) throw Error("system spec: factor needs base and block_code");
    j["base"] = to_json(*s.base);
    ojson code;
    ojson win = ojson::array();
    for (const auto& o : s.block_code->window) win.push_back(offset_key(o));
    code["window"] = win;
    code["output_alphabet"] = s.block_code->output_alphabet;
    ojson table = ojson::array();
    for (const auto& [in, out] : s.block_code->table) table.push_back(ojson{{"in", in}, {"out", out}});
    code["table"] = table;
    j["block_code"] = code;
  }
  if (s.kind == "rotation") j["alpha"] = s.alpha;
  j["seed"] = s.seed;
  return j;
}

SystemSpec from_json(const ojson& j) {
  if (!j.is_object()) throw Error("system spec: expected an object");
  expect_keys(j, {"k", "kind", "alphabet", "cube_D", "forbidden", "components", "base", "block_code", "alpha", "seed"});
  SystemSpec s;
  s.k = j.at("k").get<int>();
  if (s.k < 1 || s.k > kMaxDim) throw Error("system spec: k out of range");
  s.kind = j.at("kind").get<std::string>();
  s.alphabet = j.value("alphabet", 0);
  s.cube_D = j.value("cube_D", 0);
  s.seed = j.value("seed", std::uint64_t{0});
  if (s.kind == "full") {
    if (s.alphabet <= 0 && s.cube_D <= 0) throw Error("system spec: full shift needs alphabet or cube_D");
  } else if (s.kind == "sft") {
    if (s.alphabet <= 0) throw Error("system spec: sft needs alphabet");
    for (const auto& p : j.value("forbidden", ojson::array())) s.forbidden.push_back(pattern_from_json(p, s.k));
  } else if (s.kind == "product") {
    for (const auto& c : j.at("components")) s.components.push_back(from_json(c));
  } else if (s.kind == "factor") {
    s.base = std::make_shared<SystemSpec>(from_json(j.at("base")));
    const auto& c = j.at("block_code");
    BlockCode code;
    for (const auto& o : c.at("window")) code.window.push_back(parse_offset_key(o.get<std::string>(), s.k));
    code.output_alphabet = c.at("output_alphabet").get<int>();
    for (const auto& row : c.at("table")) code.table[row.at("in").get<std::vector<int>>()] = row.at("out").get<int>();
    s.block_code = std::move(code);
  } else if (s.kind == "rotation") {
    s.alpha = j.at("alpha").get<double>();
  } else {
    throw Error("system spec: unknown kind '" + s.kind + "'");
  }
  return s;
}

}  // namespace

std::string offset_key(const LatticePoint& p) {
  std::ostringstream os;
  for (int i = 0; i < p.dim(); ++i) os << (i ? "," : "") << p[i];
  return os.str();
}

LatticePoint parse_offset_key(const std::string& s, int k) {
  LatticePoint p(k);
  std::istringstream is(s);
  std::string part;
  int i = 0;
  while (std::getline(is, part, ',')) {
    if (i >= k) throw Error("offset key '" + s + "' has too many coordinates");
    std::size_t used = 0;
    p[i++] = std::stoll(part, &used);
    if (used != part.size()) throw Error("offset key '" + s + "' is not an integer tuple");
  }
  if (i != k) throw Error("offset key '" + s + "' has too few coordinates");
  return p;
}

bool SystemSpec::operator==(const SystemSpec& o) const {
  const bool bases_equal = (!base && !o.base) || (base && o.base && *base == *o.base);
  auto codes_equal = [&] {
    if (block_code.has_value() != o.block_code.has_value()) return false;
    if (!block_code) return true;
    return block_code->window == o.block_code->window && block_code->table == o.block_code->table &&
           block_code->output_alphabet == o.block_code->output_alphabet;
  };
  return k == o.k && kind == o.kind && alphabet == o.alphabet && cube_D == o.cube_D && forbidden == o.forbidden &&
         components == o.components && bases_equal && codes_equal() && alpha == o.alpha && seed == o.seed;
}

SystemSpec parse_system_spec(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("system spec: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("system spec: ") + e.what());
  }
}

std::string serialize_system_spec(const SystemSpec& spec) { return to_json(spec).dump(2) + "\n"; }

SystemPtr system_from_spec(const SystemSpec& s) {
  if (s.kind == "full") return std::make_shared<FullShift>(s.k, s.alphabet, s.cube_D);
  if (s.kind == "sft") return std::make_shared<SFT>(s.k, s.alphabet, s.forbidden);
  if (s.kind == "product") {
    std::vector<SystemPtr> parts;
    for (const auto& c : s.components) parts.push_back(system_from_spec(c));
    return std::make_shared<ProductSystem>(std::move(parts));
  }
  if (s.kind == "factor") return std::make_shared<FactorSystem>(system_from_spec(*s.base), *s.block_code);
  if (s.kind == "rotation") return std::make_shared<RotationCoding>(s.alpha);
  throw Error("unknown system kind '" + s.kind + "'");
}

}  // namespace mdimkit
