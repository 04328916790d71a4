#include "risklab/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace risklab {

using nlohmann::json;

const char* to_token(Sex s) { return s == Sex::F ? "F" : "M"; }

const char* to_token(Label l) { return l == Label::AtRisk ? "at_risk" : "no_risk"; }

const char* to_token(Split sp) {
    switch (sp) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
        case Split::Unassigned: return "";
    }
    return "";
}

std::optional<Sex> sex_from_token(const std::string& t) {
    if (t == "F") return Sex::F;
    if (t == "M") return Sex::M;
    return std::nullopt;
}

std::optional<Label> label_from_token(const std::string& t) {
    if (t == "at_risk") return Label::AtRisk;
    if (t == "no_risk") return Label::NoRisk;
    return std::nullopt;
}

std::optional<Split> split_from_token(const std::string& t) {
    if (t == "train") return Split::Train;
    if (t == "dev") return Split::Dev;
    if (t == "test") return Split::Test;
    if (t.empty()) return Split::Unassigned;
    return std::nullopt;
}

Corpus::Corpus(std::vector<SubjectRecord> subjects, std::string provenance)
    : subjects_(std::move(subjects)), provenance_(std::move(provenance)) {
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        auto [it, inserted] = index_.emplace(subjects_[i].subject_id, i);
        if (!inserted) throw DuplicateSubject(subjects_[i].subject_id);
    }
}

const SubjectRecord* Corpus::find(const std::string& subject_id) const {
    auto it = index_.find(subject_id);
    return it == index_.end() ? nullptr : &subjects_[it->second];
}

LabelCounts Corpus::label_counts() const {
    LabelCounts c;
    for (const auto& s : subjects_) (s.label == Label::AtRisk ? c.at_risk : c.no_risk)++;
    return c;
}

LabelCounts Corpus::label_counts(Split split) const {
    LabelCounts c;
    for (const auto& s : subjects_) {
        if (s.split == split) (s.label == Label::AtRisk ? c.at_risk : c.no_risk)++;
    }
    return c;
}

int Corpus::split_size(Split split) const {
    int n = 0;
    for (const auto& s : subjects_) n += (s.split == split);
    return n;
}

std::vector<const SubjectRecord*> Corpus::in_split(Split split) const {
    std::vector<const SubjectRecord*> out;
    for (const auto& s : subjects_) {
        if (s.split == split) out.push_back(&s);
    }
    return out;
}

MalformedRow::MalformedRow(int line_, const std::string& reason_)
    : Error("malformed row at line " + std::to_string(line_) + ": " + reason_),
      line(line_),
      reason(reason_) {}

DuplicateSubject::DuplicateSubject(const std::string& id)
    : Error("duplicate subject_id: " + id), subject_id(id) {}

EmptyStratum::EmptyStratum(const std::string& cell_)
    : Error("empty stratum cell: " + cell_), cell(cell_) {}

InvalidFractions::InvalidFractions(const std::string& why) : Error("invalid fractions: " + why) {}

namespace {

SubjectRecord record_from_json(const json& row, int line) {
    SubjectRecord r;
    const std::array<const char*, 6> required = {"subject_id", "age", "sex",
                                                 "task1",      "task2", "label"};
    for (const char* key : required) {
        if (!row.contains(key)) throw MalformedRow(line, std::string("missing field \"") + key + "\"");
    }
    if (!row["subject_id"].is_string()) throw MalformedRow(line, "subject_id must be a string");
    r.subject_id = row["subject_id"].get<std::string>();
    if (r.subject_id.empty()) throw MalformedRow(line, "subject_id is empty");
    if (!row["age"].is_number_integer()) throw MalformedRow(line, "age must be an integer");
    r.age = row["age"].get<int>();
    if (!row["sex"].is_string()) throw MalformedRow(line, "sex must be a string");
    auto sex = sex_from_token(row["sex"].get<std::string>());
    if (!sex) throw MalformedRow(line, "sex must be \"F\" or \"M\"");
    r.sex = *sex;
    if (!row["task1"].is_string() || !row["task2"].is_string())
        throw MalformedRow(line, "task1/task2 must be strings");
    r.transcript_task1 = row["task1"].get<std::string>();
    r.transcript_task2 = row["task2"].get<std::string>();
    auto label = row["label"].is_string()
                     ? label_from_token(row["label"].get<std::string>())
                     : std::nullopt;
    if (!label) throw MalformedRow(line, "label must be \"at_risk\" or \"no_risk\"");
    r.label = *label;
    if (row.contains("split")) {
        if (!row["split"].is_string()) throw MalformedRow(line, "split must be a string");
        auto sp = split_from_token(row["split"].get<std::string>());
        if (!sp || *sp == Split::Unassigned)
            throw MalformedRow(line, "split must be \"train\", \"dev\" or \"test\"");
        r.split = *sp;
    }
    if (row.contains("rationale") && row["rationale"].is_string()) {
        r.rationale = row["rationale"].get<std::string>();
    }
    return r;
}

Corpus load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path);
    std::vector<SubjectRecord> subjects;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedRow(lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!row.is_object()) throw MalformedRow(lineno, "row is not a JSON object");
        subjects.push_back(record_from_json(row, lineno));
    }
    return Corpus(std::move(subjects), "jsonl:" + path);
}

Corpus load_csv_file(const std::string& path) {
    auto records = parse_csv(read_text_file(path));
    if (records.empty()) throw MalformedRow(1, "missing header row");
    const auto& header = records.front().second;
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
    for (const char* key : {"subject_id", "age", "sex", "task1", "task2", "label"}) {
        if (!col.count(key))
            throw MalformedRow(records.front().first, std::string("header lacks column \"") + key + "\"");
    }

    std::vector<SubjectRecord> subjects;
    for (std::size_t n = 1; n < records.size(); ++n) {
        const int line = records[n].first;
        const auto& fields = records[n].second;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
        auto field = [&](const char* name) -> std::optional<std::string> {
            auto it = col.find(name);
            if (it == col.end() || it->second >= fields.size()) return std::nullopt;
            return fields[it->second];
        };
        json row = json::object();
        for (const char* name : {"subject_id", "sex", "task1", "task2", "label"}) {
            if (auto v = field(name)) row[name] = *v;
        }
        if (auto v = field("age")) {
            try {
                std::size_t pos = 0;
                int age = std::stoi(*v, &pos);
                if (pos != v->size()) throw std::invalid_argument("trailing");
                row["age"] = age;
            } catch (const std::exception&) {
                throw MalformedRow(line, "age is not an integer: \"" + *v + "\"");
            }
        }
        if (auto v = field("split"); v && !trim(*v).empty()) row["split"] = trim(*v);
        if (auto v = field("rationale"); v && !v->empty()) row["rationale"] = *v;
        subjects.push_back(record_from_json(row, line));
    }
    return Corpus(std::move(subjects), "csv:" + path);
}

json record_to_json(const SubjectRecord& r) {
    json row;
    row["subject_id"] = r.subject_id;
    row["age"] = r.age;
    row["sex"] = to_token(r.sex);
    row["task1"] = r.transcript_task1;
    row["task2"] = r.transcript_task2;
    row["label"] = to_token(r.label);
    if (r.split != Split::Unassigned) row["split"] = to_token(r.split);
    if (!r.rationale.empty()) row["rationale"] = r.rationale;
    return row;
}

}  // namespace

Corpus load_corpus(const std::string& path, CorpusFormat format) {
    return format == CorpusFormat::Jsonl ? load_jsonl(path) : load_csv_file(path);
}

void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format) {
    std::ostringstream out;
    if (format == CorpusFormat::Jsonl) {
        for (const auto& r : corpus.subjects()) out << record_to_json(r).dump() << "\n";
    } else {
        out << "subject_id,age,sex,task1,task2,label,split,rationale\r\n";
        for (const auto& r : corpus.subjects()) {
            out << csv_escape(r.subject_id) << ',' << r.age << ',' << to_token(r.sex) << ','
                << csv_escape(r.transcript_task1) << ',' << csv_escape(r.transcript_task2) << ','
                << to_token(r.label) << ',' << to_token(r.split) << ',' << csv_escape(r.rationale)
                << "\r\n";
        }
    }
    write_text_file(path, out.str());
}

std::optional<StratumKey> stratum_key_from_token(const std::string& t) {
    if (t == "label") return StratumKey::Label;
    if (t == "sex") return StratumKey::Sex;
    if (t == "age_band") return StratumKey::AgeBand;
    return std::nullopt;
}

int age_band(int age) {
    if (age <= 12) return 0;
    if (age <= 15) return 1;
    return 2;
}

const char* age_band_name(int band) {
    switch (band) {
        case 0: return "10-12";
        case 1: return "13-15";
        default: return "16-18";
    }
}

std::string stratum_cell_name(const SubjectRecord& r, const std::vector<StratumKey>& strata) {
    if (strata.empty()) return "all";
    std::string key;
    for (StratumKey k : strata) {
        if (!key.empty()) key += '|';
        switch (k) {
            case StratumKey::Label: key += "label="; key += to_token(r.label); break;
            case StratumKey::Sex: key += "sex="; key += to_token(r.sex); break;
            case StratumKey::AgeBand: key += "age_band="; key += age_band_name(age_band(r.age)); break;
        }
    }
    return key;
}

Corpus stratified_split(const Corpus& corpus, SplitFractions fractions,
                        const std::vector<StratumKey>& strata, std::uint64_t seed) {
    const std::array<double, 3> f = {fractions.train, fractions.dev, fractions.test};
    for (double v : f) {
        if (!(v > 0.0)) throw InvalidFractions("every fraction must be > 0");
    }
    if (std::fabs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw InvalidFractions("fractions must sum to 1");
    if (corpus.size() == 0) throw EmptyStratum("(corpus is empty)");

    // std::map keeps cells in a deterministic order for RNG consumption.
    std::map<std::string, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        cells[stratum_cell_name(corpus.subjects()[i], strata)].push_back(i);
    }

    std::vector<SubjectRecord> out = corpus.subjects();
    Rng rng(seed);
    for (auto& [key, members] : cells) {
        rng.shuffle(members);

        // Largest-remainder quotas; ties go to the earlier split.
        const std::size_t n = members.size();
        std::array<std::size_t, 3> quota{};
        std::array<double, 3> rem{};
        std::size_t assigned = 0;
        for (int j = 0; j < 3; ++j) {
            double exact = static_cast<double>(n) * f[j];
            quota[j] = static_cast<std::size_t>(std::floor(exact + 1e-12));
            rem[j] = exact - static_cast<double>(quota[j]);
            assigned += quota[j];
        }
        std::array<int, 3> order = {0, 1, 2};
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return rem[a] > rem[b]; });
        for (std::size_t extra = 0; extra < n - assigned; ++extra) quota[order[extra % 3]]++;

        std::size_t pos = 0;
        const std::array<Split, 3> splits = {Split::Train, Split::Dev, Split::Test};
        for (int j = 0; j < 3; ++j) {
            for (std::size_t c = 0; c < quota[j]; ++c) out[members[pos++]].split = splits[j];
        }
    }
    return Corpus(std::move(out), corpus.provenance());
}

std::vector<std::pair<int, std::vector<std::string>>> parse_csv(const std::string& text) {
    std::vector<std::pair<int, std::vector<std::string>>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    int line = 1;
    int record_line = 1;

    auto end_field = [&] {
        fields.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.emplace_back(record_line, fields);
        fields.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;  // swallowed with the \n
                [[fallthrough]];
            case '\n':
                end_record();
                ++line;
                record_line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw MalformedRow(record_line, "unterminated quoted field");
    if (field_started || !fields.empty()) end_record();
    return records;
}

std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

}  // namespace risklab
