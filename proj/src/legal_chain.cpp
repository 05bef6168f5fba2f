#include "lcr/legal_chain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcr/errors.hpp"
#include "lcr/text.hpp"

namespace lcr {

using ojson = nlohmann::ordered_json;

std::string normalize_label(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ConditionExpr
// ---------------------------------------------------------------------------

ConditionExpr ConditionExpr::predicate(std::string_view label) {
  ConditionExpr e;
  e.kind_ = Kind::Predicate;
  e.label_ = normalize_label(label);
  return e;
}

ConditionExpr ConditionExpr::all_of(std::vector<ConditionExpr> children) {
  ConditionExpr e;
  e.kind_ = Kind::And;
  e.children_ = std::move(children);
  return e;
}

ConditionExpr ConditionExpr::any_of(std::vector<ConditionExpr> children) {
  ConditionExpr e;
  e.kind_ = Kind::Or;
  e.children_ = std::move(children);
  return e;
}

void ConditionExpr::collect_labels(std::set<std::string>& out) const {
  if (kind_ == Kind::Predicate) {
    out.insert(label_);
    return;
  }
  for (const auto& c : children_) c.collect_labels(out);
}

std::set<std::string> ConditionExpr::labels() const {
  std::set<std::string> out;
  collect_labels(out);
  return out;
}

std::size_t ConditionExpr::operator_count() const {
  if (kind_ == Kind::Predicate) return 0;
  std::size_t n = 1;
  for (const auto& c : children_) n += c.operator_count();
  return n;
}

std::vector<std::string> ConditionExpr::defects() const {
  std::vector<std::string> out;
  if (kind_ == Kind::Predicate) {
    if (label_.empty()) out.emplace_back("empty predicate label");
    return out;
  }
  if (children_.size() < 2)
    out.push_back(std::string(kind_ == Kind::And ? "AND" : "OR") + " node with " +
                  std::to_string(children_.size()) + " operand(s); at least 2 required");
  for (const auto& c : children_) {
    auto sub = c.defects();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

namespace {

bool eval_normalized(const ConditionExpr& expr, const std::set<std::string>& facts) {
  switch (expr.kind()) {
    case ConditionExpr::Kind::Predicate:
      return facts.count(expr.label()) != 0;
    case ConditionExpr::Kind::And:
      return std::all_of(expr.children().begin(), expr.children().end(),
                         [&](const ConditionExpr& c) { return eval_normalized(c, facts); });
    case ConditionExpr::Kind::Or:
      return std::any_of(expr.children().begin(), expr.children().end(),
                         [&](const ConditionExpr& c) { return eval_normalized(c, facts); });
  }
  return false;
}

}  // namespace

bool eval_condition(const ConditionExpr& expr, const std::set<std::string>& facts) {
  std::set<std::string> normalized;
  for (const auto& f : facts) normalized.insert(normalize_label(f));
  return eval_normalized(expr, normalized);
}

// ---------------------------------------------------------------------------
// Chain text
// ---------------------------------------------------------------------------

std::string LegalChain::conclusion_text() const {
  if (!conclusion.text.empty()) return conclusion.text;
  std::ostringstream os;
  os << conclusion.label;
  if (conclusion.has_range())
    os << (conclusion.label.empty() ? "" : " ") << "fixed-term imprisonment of "
       << *conclusion.min_months << " to " << *conclusion.max_months << " months";
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON chain files
// ---------------------------------------------------------------------------

namespace {

const ojson& require(const ojson& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

std::string require_string(const ojson& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) throw ParseError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

int require_int(const ojson& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number_integer()) throw ParseError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

ConditionExpr expr_from_json(const ojson& j, const std::string& path) {
  if (!j.is_object() || j.size() != 1)
    throw ParseError(path + ": expected exactly one of \"pred\", \"and\", \"or\"");
  if (auto it = j.find("pred"); it != j.end()) {
    if (!it->is_string()) throw ParseError(path + ".pred: expected a string");
    return ConditionExpr::predicate(it->get<std::string>());
  }
  const bool is_and = j.contains("and");
  if (!is_and && !j.contains("or"))
    throw ParseError(path + ": expected exactly one of \"pred\", \"and\", \"or\"");
  const char* key = is_and ? "and" : "or";
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw ParseError(path + "." + key + ": expected an array");
  std::vector<ConditionExpr> children;
  for (std::size_t i = 0; i < arr.size(); ++i)
    children.push_back(expr_from_json(arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
  return is_and ? ConditionExpr::all_of(std::move(children))
                : ConditionExpr::any_of(std::move(children));
}

ojson expr_to_json(const ConditionExpr& e) {
  if (e.kind() == ConditionExpr::Kind::Predicate) return ojson{{"pred", e.label()}};
  ojson arr = ojson::array();
  for (const auto& c : e.children()) arr.push_back(expr_to_json(c));
  return ojson{{e.kind() == ConditionExpr::Kind::And ? "and" : "or", std::move(arr)}};
}

ChainComponent component_from_json(const ojson& j, const std::string& path) {
  ChainComponent c;
  c.text = require_string(j, "text", path);
  c.expr = expr_from_json(require(j, "expr", path), path + ".expr");
  return c;
}

PhraseLexicon lexicon_from_json(const ojson& j, const std::string& path) {
  PhraseLexicon out;
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  for (const auto& [label, phrases] : j.items()) {
    if (!phrases.is_array()) throw ParseError(path + "." + label + ": expected an array");
    auto& dst = out[normalize_label(label)];
    for (const auto& p : phrases) {
      if (!p.is_string()) throw ParseError(path + "." + label + ": expected strings");
      dst.push_back(p.get<std::string>());
    }
  }
  return out;
}

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

}  // namespace

ChainSet parse_chain_file(std::string_view text) {
  ojson root;
  try {
    root = ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_of_byte(text, e.byte));
  }
  ChainSet cs;
  cs.charge = require_string(root, "charge", "$");
  if (cs.charge.empty()) throw ValidationError("$.charge: empty charge identifier");
  const auto& chains = require(root, "chains", "$");
  if (!chains.is_array()) throw ParseError("$.chains: expected an array");
  if (chains.empty()) throw ValidationError("$.chains: chain list is empty");
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const std::string path = "$.chains[" + std::to_string(i) + "]";
    const auto& jc = chains[i];
    LegalChain chain;
    chain.premise = component_from_json(require(jc, "premise", path), path + ".premise");
    chain.situation = component_from_json(require(jc, "situation", path), path + ".situation");
    const auto& jr = require(jc, "conclusion", path);
    const std::string rpath = path + ".conclusion";
    chain.conclusion.min_months = require_int(jr, "min_months", rpath);
    chain.conclusion.max_months = require_int(jr, "max_months", rpath);
    chain.conclusion.label = require_string(jr, "label", rpath);
    if (jr.contains("text")) chain.conclusion.text = require_string(jr, "text", rpath);
    if (*chain.conclusion.min_months < 0)
      throw ValidationError(rpath + ": min_months is negative");
    if (*chain.conclusion.min_months > *chain.conclusion.max_months)
      throw ValidationError(rpath + ": range inversion, min_months " +
                            std::to_string(*chain.conclusion.min_months) + " > max_months " +
                            std::to_string(*chain.conclusion.max_months));
    chain.source_provision = require_string(jc, "source_provision", path);
    cs.chains.push_back(std::move(chain));
  }
  if (root.contains("lexicon")) cs.lexicon = lexicon_from_json(root["lexicon"], "$.lexicon");
  if (root.contains("fact_phrases"))
    cs.fact_phrases = lexicon_from_json(root["fact_phrases"], "$.fact_phrases");
  return cs;
}

std::string serialize_chain_set(const ChainSet& cs) {
  ojson root;
  root["charge"] = cs.charge;
  ojson chains = ojson::array();
  for (const auto& c : cs.chains) {
    ojson jc;
    jc["premise"] = {{"text", c.premise.text}, {"expr", expr_to_json(c.premise.expr)}};
    jc["situation"] = {{"text", c.situation.text}, {"expr", expr_to_json(c.situation.expr)}};
    if (!c.conclusion.has_range())
      throw ValidationError("chain for '" + cs.charge + "' has no sentencing range to serialize");
    ojson jr;
    jr["min_months"] = *c.conclusion.min_months;
    jr["max_months"] = *c.conclusion.max_months;
    jr["label"] = c.conclusion.label;
    if (!c.conclusion.text.empty()) jr["text"] = c.conclusion.text;
    jc["conclusion"] = std::move(jr);
    jc["source_provision"] = c.source_provision;
    chains.push_back(std::move(jc));
  }
  root["chains"] = std::move(chains);
  if (!cs.lexicon.empty()) root["lexicon"] = cs.lexicon;
  if (!cs.fact_phrases.empty()) root["fact_phrases"] = cs.fact_phrases;
  return root.dump(2) + "\n";
}

ChainSet load_chain_file(const std::filesystem::path& path) {
  return parse_chain_file(read_file(path));
}

void save_chain_file(const ChainSet& cs, const std::filesystem::path& path) {
  write_file(path, serialize_chain_set(cs));
}

ChainLibrary load_chain_library(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("chain library '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  ChainLibrary lib;
  for (const auto& f : files) {
    ChainSet cs;
    try {
      cs = load_chain_file(f);
    } catch (const ParseError& e) {
      throw ParseError(f.filename().string() + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(f.filename().string() + ": " + e.what());
    }
    const std::string charge = cs.charge;
    if (!lib.emplace(charge, std::move(cs)).second)
      throw ValidationError("charge '" + charge + "' defined twice in " + dir.string());
  }
  if (lib.empty()) throw ValidationError("no chain files in " + dir.string());
  return lib;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::NotCheckable:
      return "not_checkable";
  }
  return "unknown";
}

const ConstraintCheck& ValidationReport::check(std::string_view constraint) const {
  for (const auto& c : checks)
    if (c.constraint == constraint) return c;
  throw ContractError("no constraint named '" + std::string(constraint) + "'");
}

bool ValidationReport::ok() const {
  return std::none_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) {
    return !c.advisory && c.status == CheckStatus::Fail;
  });
}

std::set<std::string> ValidationOptions::default_pronoun_stoplist() {
  return {"he",    "she",  "it",     "they",           "him",       "her",    "them",
          "his",   "hers", "its",    "their",          "theirs",    "himself", "herself",
          "itself", "themselves", "aforementioned", "aforesaid", "former", "latter"};
}

ValidationReport validate_chain_set(const ChainSet& cs, const ValidationOptions& opts) {
  ConstraintCheck exhaustive{"exhaustiveness", CheckStatus::NotCheckable, false,
                             {"requires comparison against provision semantics"}};
  ConstraintCheck separation{"semantic_separation", CheckStatus::Pass, false, {}};
  ConstraintCheck coherence{"logical_coherence", CheckStatus::Pass, false, {}};
  ConstraintCheck referential{"referential_specificity", CheckStatus::Pass, true, {}};
  ConstraintCheck sentencing{"sentencing_specificity", CheckStatus::Pass, false, {}};

  auto fail = [](ConstraintCheck& c, std::string msg) {
    c.status = CheckStatus::Fail;
    c.details.push_back(std::move(msg));
  };

  if (cs.chains.empty()) fail(coherence, "chain set is empty");

  for (std::size_t i = 0; i < cs.chains.size(); ++i) {
    const auto& ch = cs.chains[i];
    const std::string at = "chain " + std::to_string(i) + ": ";

    const auto premise_labels = ch.premise.expr.labels();
    for (const auto& l : ch.situation.expr.labels())
      if (premise_labels.count(l)) fail(separation, at + "'" + l + "' is both premise and situation");

    for (const auto& d : ch.premise.expr.defects()) fail(coherence, at + "premise " + d);
    for (const auto& d : ch.situation.expr.defects()) fail(coherence, at + "situation " + d);
    if (ch.premise.text.empty()) fail(coherence, at + "premise text is empty");
    if (ch.situation.text.empty()) fail(coherence, at + "situation text is empty");
    if (ch.conclusion_text().empty()) fail(coherence, at + "conclusion text is empty");

    auto scan = [&](const std::string& where, const std::string& text) {
      for (const auto& w : split_words(normalize_label(text)))
        if (opts.pronoun_stoplist.count(w)) fail(referential, at + where + " uses '" + w + "'");
    };
    scan("premise", ch.premise.text);
    scan("situation", ch.situation.text);
    scan("conclusion", ch.conclusion_text());
    for (const auto& l : premise_labels) scan("premise predicate", l);
    for (const auto& l : ch.situation.expr.labels()) scan("situation predicate", l);

    const auto& r = ch.conclusion;
    if (!r.has_range()) {
      fail(sentencing, at + "conclusion '" + ch.conclusion_text() + "' has no sentencing range");
    } else if (!r.well_formed()) {
      fail(sentencing, at + "invalid range [" + std::to_string(*r.min_months) + ", " +
                           std::to_string(*r.max_months) + "]");
    }
  }

  ValidationReport report;
  report.checks = {exhaustive, separation, coherence, referential, sentencing};
  return report;
}

// ---------------------------------------------------------------------------
// Extraction prompt and response
// ---------------------------------------------------------------------------

std::string build_extraction_prompt(std::string_view provision_text, std::string_view charge) {
  if (trim(provision_text).empty()) throw ArgumentError("extraction prompt: provision text is empty");
  std::ostringstream os;
  os << "You are assisting a criminal-law expert. Decompose the statutory provision below into\n"
        "legal chains for the charge \""
     << charge
     << "\".\n"
        "\n"
        "A legal chain is a triplet:\n"
        "  PREMISE    - the conduct elements that constitute the offence\n"
        "  SITUATION  - the circumstances or consequences that decide which penalty applies\n"
        "  CONCLUSION - the statutory sentencing range for that premise and situation\n"
        "\n"
        "Constraints:\n"
        "1. Exhaustiveness: every distinct conduct and circumstance in the provision appears in\n"
        "   some chain.\n"
        "2. Semantic separation: a PREMISE lists conduct only; a SITUATION lists circumstances\n"
        "   or consequences only. No condition may appear in both.\n"
        "3. Logical coherence: write compound conditions with explicit AND / OR operators and\n"
        "   parentheses so that the provision's inference structure is kept.\n"
        "4. Referential specificity: replace every pronoun or indirect reference with the\n"
        "   thing it refers to.\n"
        "5. Sentencing specificity: each CONCLUSION states one prescribed range in months and\n"
        "   is not decomposed further.\n"
        "\n"
        "Output format (repeat the block once per chain, nothing else):\n"
        "===CHAIN===\n"
        "PREMISE: [condition] AND [condition]\n"
        "SITUATION: [condition] OR ([condition] AND [condition])\n"
        "CONCLUSION: <clause label> range: <min>-<max> months\n"
        "SOURCE: <article reference>\n"
        "\n"
        "Charge: "
     << charge
     << "\n"
        "Provision:\n"
     << trim(provision_text) << "\n";
  return os.str();
}

namespace {

class ConditionParser {
 public:
  explicit ConditionParser(std::string_view text) : text_(text) {}

  ConditionExpr parse() {
    auto e = parse_or();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected '" + std::string(text_.substr(pos_, 12)) + "' in condition");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool keyword(std::string_view kw) {
    skip_ws();
    if (pos_ + kw.size() > text_.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i)
      if (std::toupper(static_cast<unsigned char>(text_[pos_ + i])) != kw[i]) return false;
    const std::size_t end = pos_ + kw.size();
    if (end < text_.size() && std::isalnum(static_cast<unsigned char>(text_[end]))) return false;
    pos_ = end;
    return true;
  }

  ConditionExpr parse_or() {
    std::vector<ConditionExpr> parts{parse_and()};
    while (keyword("OR")) parts.push_back(parse_and());
    return parts.size() == 1 ? std::move(parts.front()) : ConditionExpr::any_of(std::move(parts));
  }

  ConditionExpr parse_and() {
    std::vector<ConditionExpr> parts{parse_atom()};
    while (keyword("AND")) parts.push_back(parse_atom());
    return parts.size() == 1 ? std::move(parts.front()) : ConditionExpr::all_of(std::move(parts));
  }

  ConditionExpr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("condition ends where an operand was expected");
    if (text_[pos_] == '(') {
      ++pos_;
      auto e = parse_or();
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != ')') throw ParseError("unbalanced '(' in condition");
      ++pos_;
      return e;
    }
    if (text_[pos_] == '[') {
      const auto close = text_.find(']', pos_);
      if (close == std::string_view::npos) throw ParseError("unterminated '[' in condition");
      const auto label = trim(text_.substr(pos_ + 1, close - pos_ - 1));
      if (label.empty()) throw ParseError("empty predicate label in condition");
      pos_ = close + 1;
      return ConditionExpr::predicate(label);
    }
    throw ParseError("expected '[' or '(' in condition");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string strip_brackets(std::string_view text) {
  std::string out;
  for (char c : text)
    if (c != '[' && c != ']') out.push_back(c);
  return std::string(trim(out));
}

bool starts_with_header(std::string_view line, std::string_view header, std::string_view& rest) {
  if (line.substr(0, header.size()) != header) return false;
  rest = trim(line.substr(header.size()));
  return true;
}

struct RawTriplet {
  std::size_t line = 0;
  std::vector<std::string> lines;
};

LegalChain chain_from_triplet(const RawTriplet& t) {
  std::optional<std::string> premise, situation, conclusion, source;
  for (const auto& raw : t.lines) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    std::string_view rest;
    auto assign = [&](std::optional<std::string>& slot, const char* name) {
      if (slot) throw ParseError(std::string("duplicate ") + name + " header");
      slot = std::string(rest);
    };
    if (starts_with_header(line, "PREMISE:", rest)) {
      assign(premise, "PREMISE");
    } else if (starts_with_header(line, "SITUATION:", rest)) {
      assign(situation, "SITUATION");
    } else if (starts_with_header(line, "CONCLUSION:", rest)) {
      assign(conclusion, "CONCLUSION");
    } else if (starts_with_header(line, "SOURCE:", rest)) {
      assign(source, "SOURCE");
    } else {
      throw ParseError("unrecognised line '" + std::string(line.substr(0, 40)) + "'");
    }
  }
  if (!premise || premise->empty()) throw ParseError("missing PREMISE");
  if (!situation || situation->empty()) throw ParseError("missing SITUATION");
  if (!conclusion || conclusion->empty()) throw ParseError("missing CONCLUSION");

  LegalChain chain;
  chain.premise = {strip_brackets(*premise), parse_condition(*premise)};
  chain.situation = {strip_brackets(*situation), parse_condition(*situation)};

  const std::string& c = *conclusion;
  const auto at = c.find("range:");
  if (at == std::string::npos)
    throw ParseError("CONCLUSION has no 'range: <min>-<max> months' clause");
  int lo = 0, hi = 0;
  char dash = 0;
  std::istringstream rs(c.substr(at + 6));
  std::string unit;
  if (!(rs >> lo >> dash >> hi >> unit) || dash != '-' || unit.rfind("month", 0) != 0)
    throw ParseError("CONCLUSION range is not of the form '<min>-<max> months'");
  if (lo < 0 || lo > hi)
    throw ParseError("CONCLUSION range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     "] is inverted or negative");
  chain.conclusion.label = std::string(trim(std::string_view(c).substr(0, at)));
  chain.conclusion.min_months = lo;
  chain.conclusion.max_months = hi;
  chain.source_provision = source.value_or("");

  std::set<std::string> overlap;
  const auto pl = chain.premise.expr.labels();
  for (const auto& l : chain.situation.expr.labels())
    if (pl.count(l)) overlap.insert(l);
  if (!overlap.empty())
    throw ParseError("'" + *overlap.begin() + "' appears in both PREMISE and SITUATION");
  return chain;
}

}  // namespace

ConditionExpr parse_condition(std::string_view text) {
  const auto body = trim(text);
  if (body.find('[') == std::string_view::npos) {
    if (body.empty()) throw ParseError("empty condition");
    return ConditionExpr::predicate(body);
  }
  return ConditionParser(body).parse();
}

std::string format_condition(const ConditionExpr& expr) {
  if (expr.kind() == ConditionExpr::Kind::Predicate) return "[" + expr.label() + "]";
  const char* op = expr.kind() == ConditionExpr::Kind::And ? " AND " : " OR ";
  std::string out;
  for (std::size_t i = 0; i < expr.children().size(); ++i) {
    if (i) out += op;
    const auto& c = expr.children()[i];
    out += c.kind() == ConditionExpr::Kind::Predicate ? format_condition(c)
                                                      : "(" + format_condition(c) + ")";
  }
  return out;
}

ExtractionResult parse_extraction_response(std::string_view text, std::string_view charge) {
  std::vector<RawTriplet> triplets;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line) == "===CHAIN===") {
      triplets.push_back(RawTriplet{line_no, {}});
    } else if (!triplets.empty()) {
      triplets.back().lines.push_back(line);
    }
  }
  ExtractionResult result;
  result.chains.charge = std::string(charge);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    try {
      result.chains.chains.push_back(chain_from_triplet(triplets[i]));
    } catch (const ParseError& e) {
      result.diagnostics.push_back({i, triplets[i].line, e.what()});
    }
  }
  if (result.chains.chains.empty()) {
    std::string why = triplets.empty() ? "no ===CHAIN=== blocks found"
                                       : std::to_string(triplets.size()) + " malformed triplet(s)";
    if (!result.diagnostics.empty()) why += "; first: " + result.diagnostics.front().message;
    throw ExtractionError("extraction response has no well-formed triplet: " + why);
  }
  return result;
}

}  // namespace lcr
