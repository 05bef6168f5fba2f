#include "lcr/corpus.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "lcr/errors.hpp"
#include "lcr/sentencing.hpp"
#include "lcr/text.hpp"

namespace lcr {

using ojson = nlohmann::ordered_json;

std::vector<std::string> record_defects(const CaseRecord& rec) {
  std::vector<std::string> out;
  if (rec.case_id.empty()) out.emplace_back("case_id is empty");
  if (trim(rec.fact).empty()) out.emplace_back("fact is empty");
  if (rec.charge.empty()) out.emplace_back("charge is empty");
  if (rec.sentence_months < 0) out.emplace_back("sentence_months is negative");
  const auto [b, e] = rec.sentencing_span;
  if (b > e || e > rec.opinion.size()) {
    out.push_back("sentencing_span [" + std::to_string(b) + ", " + std::to_string(e) +
                  ") lies outside the opinion");
    return out;
  }
  // The span must contain the months figure as a whole number.
  const std::string_view slice = std::string_view(rec.opinion).substr(b, e - b);
  const std::string figure = std::to_string(rec.sentence_months);
  bool found = false;
  for (std::size_t at = slice.find(figure); at != std::string_view::npos;
       at = slice.find(figure, at + 1)) {
    const bool left_ok = at == 0 || !std::isdigit(static_cast<unsigned char>(slice[at - 1]));
    const std::size_t after = at + figure.size();
    const bool right_ok =
        after >= slice.size() || !std::isdigit(static_cast<unsigned char>(slice[after]));
    if (left_ok && right_ok) {
      found = true;
      break;
    }
  }
  if (!found)
    out.push_back("sentencing_span '" + std::string(slice) + "' does not contain the months figure " +
                  figure);
  return out;
}

namespace {

template <typename T>
T field(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const ojson::exception&) {
    throw ParseError(std::string("field \"") + key + "\" has the wrong type");
  }
}

}  // namespace

CaseRecord parse_case_record(std::string_view json_line) {
  ojson j;
  try {
    j = ojson::parse(json_line.begin(), json_line.end());
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  CaseRecord r;
  r.case_id = field<std::string>(j, "case_id");
  r.fact = field<std::string>(j, "fact");
  r.charge = field<std::string>(j, "charge");
  r.opinion = field<std::string>(j, "opinion");
  if (!j.contains("sentence_months") || !j["sentence_months"].is_number_integer())
    throw ParseError("field \"sentence_months\" is missing or not an integer");
  r.sentence_months = j["sentence_months"].get<int>();
  const auto span = field<std::vector<long long>>(j, "sentencing_span");
  if (span.size() != 2 || span[0] < 0 || span[1] < 0)
    throw ParseError("field \"sentencing_span\" must be [start, end] with non-negative offsets");
  r.sentencing_span = {static_cast<std::size_t>(span[0]), static_cast<std::size_t>(span[1])};
  r.defendant = field<std::string>(j, "defendant");
  const auto defects = record_defects(r);
  if (!defects.empty()) throw ValidationError(r.case_id + ": " + defects.front());
  return r;
}

std::string serialize_case_record(const CaseRecord& rec) {
  ojson j;
  j["case_id"] = rec.case_id;
  j["fact"] = rec.fact;
  j["charge"] = rec.charge;
  j["opinion"] = rec.opinion;
  j["sentence_months"] = rec.sentence_months;
  j["sentencing_span"] = {rec.sentencing_span.first, rec.sentencing_span.second};
  j["defendant"] = rec.defendant;
  return j.dump();
}

LoadResult parse_jsonl(std::string_view text, LoadMode mode) {
  LoadResult out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.records.push_back(parse_case_record(line));
    } catch (const ParseError& e) {
      if (mode == LoadMode::FailFast) throw ParseError(e.what(), line_no);
      out.skipped.push_back({line_no, e.what()});
    } catch (const ValidationError& e) {
      if (mode == LoadMode::FailFast)
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      out.skipped.push_back({line_no, e.what()});
    }
  }
  return out;
}

LoadResult load_jsonl(const std::filesystem::path& path, LoadMode mode) {
  return parse_jsonl(read_file(path), mode);
}

std::string serialize_jsonl(const std::vector<CaseRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_case_record(r);
    out += '\n';
  }
  return out;
}

void save_jsonl(const std::vector<CaseRecord>& records, const std::filesystem::path& path) {
  write_file(path, serialize_jsonl(records));
}

std::string charge_display_name(std::string_view charge) {
  std::string out(charge);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

namespace {

// Portable draws from a raw 64-bit engine.
std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  // Multiply-shift on the top 32 bits; bias is negligible for small n.
  return static_cast<std::size_t>(((rng() >> 32) * static_cast<std::uint64_t>(n)) >> 32);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(pick(rng, static_cast<std::size_t>(hi - lo + 1)));
}

template <typename T>
const T& choose(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[pick(rng, items.size())];
}

// A minimal set of labels satisfying `expr`: all children of AND, one of OR.
void satisfying_labels(const ConditionExpr& expr, std::mt19937_64& rng,
                       std::vector<std::string>& out) {
  switch (expr.kind()) {
    case ConditionExpr::Kind::Predicate:
      if (std::find(out.begin(), out.end(), expr.label()) == out.end()) out.push_back(expr.label());
      return;
    case ConditionExpr::Kind::And:
      for (const auto& c : expr.children()) satisfying_labels(c, rng, out);
      return;
    case ConditionExpr::Kind::Or:
      satisfying_labels(choose(rng, expr.children()), rng, out);
      return;
  }
}

std::string realize(const PhraseLexicon& lex, const std::string& label, std::mt19937_64& rng) {
  auto it = lex.find(label);
  if (it == lex.end() || it->second.empty()) return label;
  return choose(rng, it->second);
}

std::string join_clauses(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += (i + 1 == parts.size()) ? " and " : ", ";
    out += parts[i];
  }
  return out;
}

const std::vector<std::string>& defendant_pool() {
  static const std::vector<std::string> kPool = {"Defendant A", "Defendant B", "Defendant C",
                                                 "Defendant D", "Defendant E", "Defendant F"};
  return kPool;
}

const std::vector<std::string>& distractor_pool() {
  static const std::vector<std::string> kPool = {
      "The weather that evening was clear.",
      "A neighbour reported hearing a car nearby.",
      "The case was transferred from the district police station.",
      "The defendant has a fixed residence in the city.",
      "Surveillance footage of the street was collected.",
      "The defendant was summoned by telephone and appeared voluntarily.",
      "Two witnesses gave written statements.",
      "The hearing was held in public.",
  };
  return kPool;
}

const std::vector<std::string>& month_names() {
  static const std::vector<std::string> kMonths = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  return kMonths;
}

CaseRecord synthesize_case(const ChainSet& cs, std::size_t case_index, std::mt19937_64& rng,
                           int distractors) {
  const LegalChain& chain = choose(rng, cs.chains);
  if (!chain.conclusion.well_formed())
    throw ValidationError("chain for '" + cs.charge + "' has no usable sentencing range");

  std::vector<std::string> premise_labels, situation_labels;
  satisfying_labels(chain.premise.expr, rng, premise_labels);
  satisfying_labels(chain.situation.expr, rng, situation_labels);

  const std::string defendant = choose(rng, defendant_pool());
  std::vector<std::string> fact_parts, premise_parts, situation_parts;
  for (const auto& l : premise_labels) fact_parts.push_back(realize(cs.fact_phrases, l, rng));
  for (const auto& l : situation_labels) fact_parts.push_back(realize(cs.fact_phrases, l, rng));
  for (const auto& l : premise_labels) premise_parts.push_back(realize(cs.lexicon, l, rng));
  for (const auto& l : situation_labels) situation_parts.push_back(realize(cs.lexicon, l, rng));

  const std::string date = choose(rng, month_names()) + " " + std::to_string(uniform_int(rng, 1, 28)) +
                           ", " + std::to_string(uniform_int(rng, 2012, 2020));
  std::string fact = "The court ascertained that on " + date + ", " + defendant + " " +
                     join_clauses(fact_parts) + ".";
  for (int i = 0; i < distractors; ++i) fact += " " + choose(rng, distractor_pool());

  const int months = uniform_int(rng, *chain.conclusion.min_months, *chain.conclusion.max_months);
  const std::string provision =
      chain.source_provision.empty() ? "the applicable provisions" : chain.source_provision;
  std::string opinion = "This court holds that " + defendant + ", " + join_clauses(premise_parts) +
                        ", " + join_clauses(situation_parts) + ". The actions of " + defendant +
                        " constitute the crime of " + charge_display_name(cs.charge) +
                        ". The prosecution's charge is established. In accordance with " +
                        provision + " of the Criminal Law, the judgment is as follows: ";
  const std::size_t span_begin = opinion.size();
  opinion += std::to_string(months) + " months of fixed-term imprisonment";
  const std::size_t span_end = opinion.size();
  opinion += ".";

  CaseRecord rec;
  char id[32];
  std::snprintf(id, sizeof id, "-%03zu", case_index);
  rec.case_id = cs.charge + id;
  rec.fact = std::move(fact);
  rec.charge = cs.charge;
  rec.opinion = std::move(opinion);
  rec.sentence_months = months;
  rec.sentencing_span = {span_begin, span_end};
  rec.defendant = defendant;
  return rec;
}

}  // namespace

std::vector<CaseRecord> synthesize_corpus(std::uint64_t seed, const SynthesisSpec& spec,
                                          const ChainLibrary& library) {
  if (library.empty()) throw ArgumentError("synthesize_corpus: chain library is empty");
  if (spec.cases_per_charge < 0) throw ArgumentError("cases_per_charge must be >= 0");
  std::vector<std::string> charges = spec.charges;
  if (charges.empty())
    for (const auto& [c, cs] : library) charges.push_back(c);

  std::vector<CaseRecord> out;
  for (std::size_t ci = 0; ci < charges.size(); ++ci) {
    auto it = library.find(charges[ci]);
    if (it == library.end())
      throw ArgumentError("synthesize_corpus: no chain set for charge '" + charges[ci] + "'");
    if (it->second.chains.empty())
      throw ArgumentError("synthesize_corpus: chain set for '" + charges[ci] + "' is empty");
    for (int k = 0; k < spec.cases_per_charge; ++k) {
      // Independent substream per (charge, case).
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(ci), static_cast<std::uint32_t>(k)};
      std::mt19937_64 rng(seq);
      out.push_back(synthesize_case(it->second, static_cast<std::size_t>(k), rng, spec.distractors));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

CorpusSplit split_corpus(const std::vector<CaseRecord>& corpus, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("split ratio must lie in (0, 1)");
  std::set<std::string> ids;
  for (const auto& r : corpus)
    if (!ids.insert(r.case_id).second) throw ValidationError("duplicate case_id '" + r.case_id + "'");

  std::map<std::string, std::vector<std::size_t>> by_charge;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_charge[corpus[i].charge].push_back(i);

  CorpusSplit out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::vector<bool> in_train(corpus.size(), false);
  for (auto& [charge, idx] : by_charge) {
    if (idx.size() < 2)
      out.warnings.push_back("charge '" + charge + "' has " + std::to_string(idx.size()) +
                             " case(s); cannot stratify");
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[pick(rng, i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < n_train && i < idx.size(); ++i) in_train[idx[i]] = true;
  }
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (in_train[i] ? out.train : out.test).push_back(corpus[i]);
  return out;
}

}  // namespace lcr
