#include "syllogic/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

namespace syllogic {
namespace {

using nlohmann::json;

std::string full_precision(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string one_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string pairing_str(const Pairing& p) {
  return "(" + p.premise_language + ", " + p.hypothesis_language + ")";
}

std::string bucket_range(Bucket b) {
  switch (b) {
    case Bucket::Below30: return "[0, 30)";
    case Bucket::From30to35: return "[30, 35)";
    case Bucket::From35to40: return "[35, 40)";
    case Bucket::From40to45: return "[40, 45)";
    case Bucket::From45to50: return "[45, 50)";
    case Bucket::From50to55: return "[50, 55)";
    case Bucket::From55to60: return "[55, 60)";
    case Bucket::AtLeast60: return "[60, 100]";
  }
  throw ContractError("unreachable bucket");
}

}  // namespace

const CellResult& AccuracyMatrix::cell(const std::string& premise_language,
                                       const std::string& hypothesis_language) const {
  for (const CellResult& c : cells) {
    if (c.pairing.premise_language == premise_language &&
        c.pairing.hypothesis_language == hypothesis_language) {
      return c;
    }
  }
  throw ContractError("matrix has no cell for " +
                      pairing_str(Pairing{premise_language, hypothesis_language}));
}

std::string to_string(Bucket b) {
  switch (b) {
    case Bucket::Below30: return "<30";
    case Bucket::From30to35: return "30-35";
    case Bucket::From35to40: return "35-40";
    case Bucket::From40to45: return "40-45";
    case Bucket::From45to50: return "45-50";
    case Bucket::From50to55: return "50-55";
    case Bucket::From55to60: return "55-60";
    case Bucket::AtLeast60: return ">=60";
  }
  throw ContractError("unreachable bucket");
}

const std::array<Bucket, 8>& all_buckets() {
  static const std::array<Bucket, 8> buckets = {
      Bucket::Below30,     Bucket::From30to35, Bucket::From35to40,
      Bucket::From40to45,  Bucket::From45to50, Bucket::From50to55,
      Bucket::From55to60,  Bucket::AtLeast60};
  return buckets;
}

Bucket bucket(double accuracy_percent) {
  if (!(accuracy_percent >= 0.0) || !(accuracy_percent <= 100.0)) {
    throw ContractError("accuracy percentage out of range: " +
                        full_precision(accuracy_percent));
  }
  if (accuracy_percent < 30.0) return Bucket::Below30;
  if (accuracy_percent < 35.0) return Bucket::From30to35;
  if (accuracy_percent < 40.0) return Bucket::From35to40;
  if (accuracy_percent < 45.0) return Bucket::From40to45;
  if (accuracy_percent < 50.0) return Bucket::From45to50;
  if (accuracy_percent < 55.0) return Bucket::From50to55;
  if (accuracy_percent < 60.0) return Bucket::From55to60;
  return Bucket::AtLeast60;
}

CellResult score(const std::vector<PredictionRecord>& records) {
  if (records.empty()) {
    throw ContractError("accuracy over zero records is undefined");
  }
  CellResult cell;
  cell.pairing = records.front().pairing;
  for (const PredictionRecord& rec : records) {
    if (rec.pairing != cell.pairing) {
      throw ContractError("mixed pairings in one cell: " + pairing_str(cell.pairing) +
                          " and " + pairing_str(rec.pairing));
    }
    ++cell.n;
    if (!rec.parsed) {
      ++cell.invalid;
    } else if (*rec.parsed == rec.gold) {
      ++cell.correct;
    }
  }
  cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.n);
  return cell;
}

AccuracyMatrix matrix(const std::vector<CellResult>& cells,
                      const std::vector<std::string>& languages,
                      const std::string& model) {
  if (languages.empty()) throw ContractError("matrix needs at least one language");
  if (std::set<std::string>(languages.begin(), languages.end()).size() !=
      languages.size()) {
    throw ContractError("matrix language list holds duplicates");
  }
  std::map<Pairing, const CellResult*> by_pairing;
  for (const CellResult& c : cells) {
    if (!by_pairing.emplace(c.pairing, &c).second) {
      throw ContractError("duplicate cell for " + pairing_str(c.pairing));
    }
  }
  AccuracyMatrix m;
  m.model = model;
  m.languages = languages;
  m.cells.reserve(languages.size() * languages.size());
  for (const std::string& row : languages) {
    for (const std::string& col : languages) {
      const auto it = by_pairing.find(Pairing{row, col});
      if (it == by_pairing.end()) {
        throw ContractError("missing cell for " + pairing_str(Pairing{row, col}));
      }
      m.cells.push_back(*it->second);
      by_pairing.erase(it);
    }
  }
  if (!by_pairing.empty()) {
    throw ContractError("cell " + pairing_str(by_pairing.begin()->first) +
                        " is outside the requested language set");
  }
  return m;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.empty() || v.empty()) throw ContractError("cosine of an empty vector");
  if (u.size() != v.size()) {
    throw ContractError("cosine dimension mismatch: " + std::to_string(u.size()) +
                        " vs " + std::to_string(v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ContractError("cosine of a zero vector");
  return dot / (std::sqrt(uu) * std::sqrt(vv));
}

QualityRow translation_quality(const std::vector<std::string>& source_texts,
                               const std::vector<std::string>& translated_texts,
                               const std::string& language, const Gateway& gateway) {
  if (source_texts.empty()) throw ContractError("translation quality needs at least one pair");
  if (source_texts.size() != translated_texts.size()) {
    throw ContractError("aligned text lists differ in length: " +
                        std::to_string(source_texts.size()) + " vs " +
                        std::to_string(translated_texts.size()));
  }
  const EmbedBatch source = gateway.embed_batch(source_texts);
  const EmbedBatch translated = gateway.embed_batch(translated_texts);
  double total = 0.0;
  for (std::size_t i = 0; i < source.vectors.size(); ++i) {
    total += cosine(source.vectors[i], translated.vectors[i]);
  }
  QualityRow row;
  row.language = language;
  row.sample_size = source_texts.size();
  row.mean_cosine = total / static_cast<double>(source_texts.size());
  return row;
}

std::string to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
    case ReportFormat::Markdown: return "markdown";
  }
  throw ContractError("unreachable format");
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw ConfigError("unknown report format \"" + std::string(s) + "\"");
}

std::string report_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::Csv: return ".csv";
    case ReportFormat::Json: return ".json";
    case ReportFormat::Markdown: return ".md";
  }
  throw ContractError("unreachable format");
}

std::string render_matrix(const AccuracyMatrix& m, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out = "premise";
    for (const std::string& lang : m.languages) out += "," + lang;
    out += "\n";
    for (const std::string& row : m.languages) {
      out += row;
      for (const std::string& col : m.languages) {
        out += "," + full_precision(m.cell(row, col).accuracy);
      }
      out += "\n";
    }
    return out;
  }
  if (format == ReportFormat::Json) {
    json cells = json::object();
    for (const std::string& row : m.languages) {
      json row_obj = json::object();
      for (const std::string& col : m.languages) {
        const CellResult& c = m.cell(row, col);
        row_obj[col] = json{{"n", c.n},
                            {"correct", c.correct},
                            {"invalid", c.invalid},
                            {"accuracy", c.accuracy},
                            {"bucket", to_string(bucket(c.accuracy * 100.0))},
                            {"monolingual", c.pairing.monolingual()}};
      }
      cells[row] = std::move(row_obj);
    }
    const json doc{{"model", m.model}, {"languages", m.languages}, {"cells", cells}};
    return doc.dump(2) + "\n";
  }

  std::string out = "# Accuracy matrix\n\nModel: `" + m.model + "`\n\n";
  out += "Cells are accuracy in percent with the bucket in parentheses; `*` marks the "
         "monolingual diagonal.\n\n";
  out += "| premise \\ hypothesis |";
  for (const std::string& lang : m.languages) out += " " + lang + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < m.languages.size(); ++i) out += "---|";
  out += "\n";
  for (const std::string& row : m.languages) {
    out += "| " + row + " |";
    for (const std::string& col : m.languages) {
      const CellResult& c = m.cell(row, col);
      const double pct = c.accuracy * 100.0;
      out += " " + one_decimal(pct) + " (" + to_string(bucket(pct)) + ")";
      if (c.pairing.monolingual()) out += " *";
      out += " |";
    }
    out += "\n";
  }
  out += "\n## Monolingual accuracy\n\n| language | accuracy (%) | invalid | bucket |\n"
         "|---|---|---|---|\n";
  for (const std::string& lang : m.languages) {
    const CellResult& c = m.cell(lang, lang);
    const double pct = c.accuracy * 100.0;
    out += "| " + lang + " | " + one_decimal(pct) + " | " + std::to_string(c.invalid) +
           " | " + to_string(bucket(pct)) + " |\n";
  }
  out += "\n## Legend\n\n| bucket | accuracy (%) |\n|---|---|\n";
  for (Bucket b : all_buckets()) {
    out += "| " + to_string(b) + " | " + bucket_range(b) + " |\n";
  }
  return out;
}

std::string render_quality(const std::vector<QualityRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out = "language,sample_size,mean_cosine\n";
    for (const QualityRow& row : rows) {
      out += row.language + "," + std::to_string(row.sample_size) + "," +
             full_precision(row.mean_cosine) + "\n";
    }
    return out;
  }
  if (format == ReportFormat::Json) {
    json doc = json::array();
    for (const QualityRow& row : rows) {
      doc.push_back(json{{"language", row.language},
                         {"sample_size", row.sample_size},
                         {"mean_cosine", row.mean_cosine}});
    }
    return doc.dump(2) + "\n";
  }
  std::string out =
      "# Translation quality\n\n| language | sample size | mean cosine |\n|---|---|---|\n";
  for (const QualityRow& row : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", row.mean_cosine);
    out += "| " + row.language + " | " + std::to_string(row.sample_size) + " | " + buf +
           " |\n";
  }
  return out;
}

namespace {

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace

void emit(const AccuracyMatrix& m, ReportFormat format,
          const std::filesystem::path& path) {
  write_text(render_matrix(m, format), path);
}

void emit(const std::vector<QualityRow>& rows, ReportFormat format,
          const std::filesystem::path& path) {
  write_text(render_quality(rows, format), path);
}

}  // namespace syllogic
