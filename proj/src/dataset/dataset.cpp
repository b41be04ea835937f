#include "datacheck/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>
#include <unordered_set>

namespace datacheck {

namespace {

constexpr double kInferenceShare = 0.8;

constexpr std::array<std::string_view, 12> kMonthNames = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {"a",  "an", "the", "of", "for",
                                                          "in", "on", "is",  "are", "with"};
    return words;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::optional<int> to_int(std::string_view s) {
    if (!all_digits(s)) return std::nullopt;
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<Date> make_date(int y, int m, int d) {
    if (y < 1 || y > 9999 || m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return std::nullopt;
    return Date{y, m, d};
}

// RFC-4180 record splitter. Returns records with the 1-based line each started on.
struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

std::vector<Record> split_records(std::string_view text) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool record_has_content = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        if (record_has_content) {
            end_field();
            records.push_back(std::move(current));
        }
        current = Record{};
        field.clear();
        field_started = false;
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
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
                if (!field_started || field.empty()) {
                    in_quotes = true;
                    field_started = true;
                    record_has_content = true;
                } else {
                    field.push_back(c);
                }
                break;
            case ',':
                record_has_content = true;
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                current.line = line;
                break;
            default:
                if (!record_has_content) current.line = line;
                field.push_back(c);
                field_started = true;
                record_has_content = true;
        }
    }
    if (in_quotes) throw IngestError(IngestError::Kind::Malformed, "unterminated quoted field", current.line);
    end_record();
    return records;
}

}  // namespace

std::int64_t Date::serial() const {
    // Days-from-civil (Howard Hinnant's algorithm).
    const int y = year - (month <= 2 ? 1 : 0);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned mp = static_cast<unsigned>(month + (month > 2 ? -3 : 9));
    const unsigned doy = (153 * mp + 2) / 5 + static_cast<unsigned>(day) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Numeric: return "numeric";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Temporal: return "temporal";
    }
    return "categorical";
}

IngestError::IngestError(Kind kind, std::string detail, std::size_t line)
    : std::runtime_error([&] {
          std::string msg;
          switch (kind) {
              case Kind::EmptyInput: msg = "EmptyInput"; break;
              case Kind::RaggedRow: msg = "RaggedRow(line " + std::to_string(line) + ")"; break;
              case Kind::DuplicateColumn: msg = "DuplicateColumn(" + detail + ")"; break;
              case Kind::Malformed: msg = "Malformed(line " + std::to_string(line) + ")"; break;
          }
          if (!detail.empty() && kind != Kind::DuplicateColumn) msg += ": " + detail;
          return msg;
      }()),
      kind_(kind),
      detail_(std::move(detail)),
      line_(line) {}

std::string_view IngestError::kind_name() const {
    switch (kind_) {
        case Kind::EmptyInput: return "EmptyInput";
        case Kind::RaggedRow: return "RaggedRow";
        case Kind::DuplicateColumn: return "DuplicateColumn";
        case Kind::Malformed: return "Malformed";
    }
    return "Malformed";
}

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_missing_text(std::string_view text) {
    const std::string t = to_lower(trim(text));
    return t.empty() || t == "na" || t == "n/a";
}

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> days = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) return 0;
    return month == 2 && is_leap_year(year) ? 29 : days[static_cast<std::size_t>(month - 1)];
}

std::optional<double> parse_number(std::string_view raw) {
    std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    bool negative = false;
    std::size_t pos = 0;
    if (s[pos] == '-' || s[pos] == '+') {
        negative = s[pos] == '-';
        ++pos;
    }
    if (pos < s.size() && s[pos] == '$') ++pos;
    if (pos < s.size() && (s[pos] == '-' || s[pos] == '+') && !negative) {
        negative = s[pos] == '-';
        ++pos;
    }
    std::string body = s.substr(pos);
    if (!body.empty() && body.back() == '%') body.pop_back();
    if (body.empty()) return std::nullopt;

    if (body.find(',') != std::string::npos) {
        // Integer part must be 1-3 digits followed by groups of exactly three.
        const std::size_t dot = body.find('.');
        const std::string int_part = body.substr(0, dot);
        std::size_t first = int_part.find(',');
        if (first == 0 || first > 3) return std::nullopt;
        std::string digits;
        std::size_t group_start = 0;
        for (std::size_t i = 0; i <= int_part.size(); ++i) {
            if (i == int_part.size() || int_part[i] == ',') {
                const std::size_t len = i - group_start;
                if (group_start != 0 && len != 3) return std::nullopt;
                const auto group = std::string_view(int_part).substr(group_start, len);
                if (!all_digits(group)) return std::nullopt;
                digits += group;
                group_start = i + 1;
            }
        }
        body = digits + (dot == std::string::npos ? std::string() : body.substr(dot));
    }

    for (char c : body) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'e' || c == 'E' || c == '-' ||
              c == '+'))
            return std::nullopt;
    }
    if (!std::isdigit(static_cast<unsigned char>(body.front())) && body.front() != '.') return std::nullopt;
    double value = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec != std::errc() || ptr != body.data() + body.size()) return std::nullopt;
    return negative ? -value : value;
}

std::optional<Date> parse_date(std::string_view raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;

    // YYYY-MM-DD
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
        auto y = to_int(std::string_view(s).substr(0, 4));
        auto m = to_int(std::string_view(s).substr(5, 2));
        auto d = to_int(std::string_view(s).substr(8, 2));
        if (y && m && d) return make_date(*y, *m, *d);
        return std::nullopt;
    }

    // M/D/YYYY
    if (std::count(s.begin(), s.end(), '/') == 2) {
        const auto a = s.find('/');
        const auto b = s.find('/', a + 1);
        auto m = to_int(std::string_view(s).substr(0, a));
        auto d = to_int(std::string_view(s).substr(a + 1, b - a - 1));
        const auto ytext = std::string_view(s).substr(b + 1);
        auto y = to_int(ytext);
        if (m && d && y && ytext.size() == 4 && a <= 2 && b - a - 1 <= 2) return make_date(*y, *m, *d);
        return std::nullopt;
    }

    // Month YYYY
    const auto space = s.find_first_of(" \t");
    if (space != std::string::npos) {
        const std::string month = to_lower(s.substr(0, space));
        const std::string year = trim(std::string_view(s).substr(space + 1));
        auto y = to_int(year);
        if (!y || year.size() != 4) return std::nullopt;
        for (std::size_t i = 0; i < kMonthNames.size(); ++i) {
            const auto name = kMonthNames[i];
            const bool full = month == name;
            const bool abbrev = month.size() == 3 && name.substr(0, 3) == month;
            const bool abbrev_dot = month.size() == 4 && month.back() == '.' && name.substr(0, 3) == month.substr(0, 3);
            if (full || abbrev || abbrev_dot) return make_date(*y, static_cast<int>(i) + 1, 1);
        }
    }
    return std::nullopt;
}

std::string fold_attribute(std::string_view name) {
    std::string out;
    bool pending_space = false;
    for (char raw : name) {
        const auto c = static_cast<unsigned char>(raw);
        if (c == '_' || std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> Dataset::resolve(std::string_view attribute) const {
    const std::string key = fold_attribute(attribute);
    if (key.empty()) return std::nullopt;
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (fold_attribute(columns[i].name) == key) {
            if (found) return std::nullopt;  // ambiguous after folding
            found = i;
        }
    }
    return found;
}

Dataset ingest_csv(std::string_view bytes, std::string name) {
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xEF &&
        static_cast<unsigned char>(bytes[1]) == 0xBB && static_cast<unsigned char>(bytes[2]) == 0xBF)
        bytes.remove_prefix(3);
    if (trim(bytes).empty()) throw IngestError(IngestError::Kind::EmptyInput, "no header row");

    auto records = split_records(bytes);
    if (records.empty()) throw IngestError(IngestError::Kind::EmptyInput, "no header row");

    Dataset ds;
    ds.name = std::move(name);
    std::set<std::string> seen;
    for (const auto& h : records.front().fields) {
        const std::string key = trim(h);
        if (!seen.insert(key).second) throw IngestError(IngestError::Kind::DuplicateColumn, key, records.front().line);
        ds.columns.push_back(Column{h, ColumnKind::Categorical});
    }
    const std::size_t width = ds.columns.size();

    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].fields.size() != width)
            throw IngestError(IngestError::Kind::RaggedRow,
                              "expected " + std::to_string(width) + " cells, found " +
                                  std::to_string(records[r].fields.size()),
                              records[r].line);
        ds.raw.push_back(std::move(records[r].fields));
    }

    for (std::size_t c = 0; c < width; ++c) {
        std::size_t non_empty = 0, numbers = 0, dates = 0;
        for (const auto& row : ds.raw) {
            const auto& cell = row[c];
            if (is_missing_text(cell)) continue;
            ++non_empty;
            if (parse_number(cell)) ++numbers;
            if (parse_date(cell)) ++dates;
        }
        if (non_empty == 0) continue;
        const double n = static_cast<double>(non_empty);
        if (static_cast<double>(numbers) >= kInferenceShare * n)
            ds.columns[c].kind = ColumnKind::Numeric;
        else if (static_cast<double>(dates) >= kInferenceShare * n)
            ds.columns[c].kind = ColumnKind::Temporal;
    }

    ds.rows.reserve(ds.raw.size());
    for (const auto& raw_row : ds.raw) {
        Row row;
        row.reserve(width);
        for (std::size_t c = 0; c < width; ++c) {
            const auto& text = raw_row[c];
            if (is_missing_text(text)) {
                row.emplace_back(Missing{});
                continue;
            }
            switch (ds.columns[c].kind) {
                case ColumnKind::Numeric:
                    if (auto v = parse_number(text)) {
                        row.emplace_back(*v);
                        continue;
                    }
                    break;
                case ColumnKind::Temporal:
                    if (auto d = parse_date(text)) {
                        row.emplace_back(*d);
                        continue;
                    }
                    break;
                case ColumnKind::Categorical: break;
            }
            row.emplace_back(trim(text));
        }
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

std::vector<SchemaEntry> schema(const Dataset& dataset) {
    std::vector<SchemaEntry> out;
    out.reserve(dataset.columns.size());
    for (const auto& c : dataset.columns) out.push_back({c.name, c.kind});
    return out;
}

std::vector<std::string> suitability_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !stopwords().count(cur)) tokens.push_back(cur);
        cur.clear();
    };
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c))
            cur.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return tokens;
}

double suitability_score(std::span<const std::string> claim_terms, const Dataset& dataset) {
    if (claim_terms.empty()) throw EmptyTermsError();
    std::set<std::string> claim, cols;
    for (const auto& t : claim_terms)
        for (auto& tok : suitability_tokens(t)) claim.insert(std::move(tok));
    for (const auto& c : dataset.columns)
        for (auto& tok : suitability_tokens(c.name)) cols.insert(std::move(tok));
    std::size_t inter = 0;
    for (const auto& t : claim) inter += cols.count(t);
    const std::size_t uni = claim.size() + cols.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<double> numeric_value(const CellValue& cell) {
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    return std::nullopt;
}

std::string display_text(const CellValue& cell) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Missing>)
                return "";
            else if constexpr (std::is_same_v<T, double>) {
                char buf[64];
                auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
                return std::string(buf, ptr);
            } else if constexpr (std::is_same_v<T, Date>)
                return v.iso();
            else
                return v;
        },
        cell);
}

}  // namespace datacheck
