#include "citescope/language.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "citescope/error.hpp"
#include "citescope/text.hpp"

#ifndef CITESCOPE_DATA_DIR
#define CITESCOPE_DATA_DIR "data"
#endif

namespace citescope {

namespace {

enum class Script { latin_like, han, kana, hangul };

Script script_of(char32_t c) {
    if ((c >= 0x3400 && c <= 0x4DBF) || (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0xF900 && c <= 0xFAFF)) {
        return Script::han;
    }
    if (c >= 0x3040 && c <= 0x30FF) return Script::kana;
    if (c >= 0xAC00 && c <= 0xD7AF) return Script::hangul;
    return Script::latin_like;
}

std::vector<std::u32string> tokens_of(std::string_view title) {
    std::vector<std::u32string> tokens;
    std::u32string current;
    for (char32_t c : text::decode_utf8(title)) {
        const char32_t lc = text::to_lower(c);
        if (text::is_letter(lc)) {
            current.push_back(lc);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

}  // namespace

std::vector<std::u32string> title_trigrams(std::string_view title) {
    std::vector<std::u32string> grams;
    for (const auto& token : tokens_of(title)) {
        std::u32string padded = U" " + token + U" ";
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) grams.push_back(padded.substr(i, 3));
    }
    return grams;
}

std::size_t title_token_count(std::string_view title) { return tokens_of(title).size(); }

LanguageProfile build_profile(std::string code, std::string_view training_text) {
    LanguageProfile p;
    p.code = std::move(code);
    for (auto& g : title_trigrams(training_text)) {
        p.counts[g] += 1.0;
        p.total += 1.0;
    }
    return p;
}

LanguageDetector::LanguageDetector(std::vector<LanguageProfile> profiles) : profiles_(std::move(profiles)) {
    std::sort(profiles_.begin(), profiles_.end(),
              [](const LanguageProfile& a, const LanguageProfile& b) { return a.code < b.code; });
    std::set<std::u32string> vocab;
    for (const auto& p : profiles_) {
        for (const auto& [g, c] : p.counts) vocab.insert(g);
    }
    vocabulary_ = static_cast<double>(vocab.size()) + 1.0;
}

LanguageDetector LanguageDetector::from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("language profile directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".tsv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<LanguageProfile> profiles;
    for (const auto& f : files) {
        std::ifstream in(f);
        LanguageProfile p;
        p.code = f.stem().string();
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line.front() == '#') continue;
            const auto tab = line.rfind('\t');
            if (tab == std::string::npos) throw ParseError(f.string(), line_no, "expected trigram<TAB>count");
            const auto gram = text::decode_utf8(std::string_view(line).substr(0, tab));
            const double count = std::strtod(line.c_str() + tab + 1, nullptr);
            if (gram.size() != 3 || !(count > 0)) throw ParseError(f.string(), line_no, "bad profile entry");
            p.counts[gram] += count;
            p.total += count;
        }
        profiles.push_back(std::move(p));
    }
    if (profiles.empty()) throw DataError("no language profiles in " + dir.string());
    return LanguageDetector(std::move(profiles));
}

std::filesystem::path bundled_profile_dir() {
    if (const char* env = std::getenv("CITESCOPE_LANG_PROFILES"); env && *env) return env;
    return std::filesystem::path(CITESCOPE_DATA_DIR) / "langprofiles";
}

const LanguageDetector& LanguageDetector::bundled() {
    static const LanguageDetector detector = from_directory(bundled_profile_dir());
    return detector;
}

std::vector<std::string> LanguageDetector::codes() const {
    std::vector<std::string> out;
    for (const auto& p : profiles_) out.push_back(p.code);
    return out;
}

LanguageTag LanguageDetector::detect(std::string_view title) const {
    if (text::normalize_whitespace(title).empty()) throw DataError("cannot detect language of an empty title");

    std::size_t letters = 0, han = 0, kana = 0, hangul = 0;
    for (char32_t c : text::decode_utf8(title)) {
        if (!text::is_letter(c)) continue;
        ++letters;
        switch (script_of(c)) {
            case Script::han: ++han; break;
            case Script::kana: ++kana; break;
            case Script::hangul: ++hangul; break;
            default: break;
        }
    }
    const std::size_t cjk = han + kana + hangul;
    if (cjk > 0 && 2 * cjk > letters) {
        if (han >= kana && han >= hangul) return {"zh", static_cast<double>(han) / cjk};
        if (kana >= hangul) return {"ja", static_cast<double>(kana) / cjk};
        return {"ko", static_cast<double>(hangul) / cjk};
    }

    if (title_token_count(title) < 2) return {"und", 0.0};
    const auto grams = title_trigrams(title);

    std::vector<double> scores(profiles_.size(), 0.0);
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        const auto& p = profiles_[i];
        const double denom = std::log(p.total + vocabulary_);
        double s = 0.0;
        for (const auto& g : grams) {
            auto it = p.counts.find(g);
            const double c = (it == p.counts.end()) ? 0.0 : it->second;
            s += std::log(c + 1.0) - denom;
        }
        scores[i] = s;
    }
    if (profiles_.empty()) return {"und", 0.0};
    // Profiles are sorted by code, so the first maximum wins ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    double z = 0.0;
    for (double s : scores) z += std::exp(s - scores[best]);
    return {profiles_[best].code, 1.0 / z};
}

LanguageTag detect_language(std::string_view title) { return LanguageDetector::bundled().detect(title); }

std::map<std::string, double> language_shares(const std::vector<std::string>& titles,
                                              const LanguageDetector& detector) {
    if (titles.empty()) throw DataError("language_shares: empty title list");
    std::map<std::string, std::size_t> counts;
    for (const auto& t : titles) ++counts[detector.detect(t).code];
    std::map<std::string, double> shares;
    const double n = static_cast<double>(titles.size());
    for (const auto& [code, c] : counts) shares[code] = static_cast<double>(c) / n;
    return shares;
}

void write_profile(const LanguageProfile& profile, const std::filesystem::path& path) {
    std::vector<std::pair<std::u32string, double>> entries(profile.counts.begin(), profile.counts.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::ofstream out(path);
    for (const auto& [g, c] : entries) out << text::encode_utf8(g) << '\t' << static_cast<long long>(c) << '\n';
}

}  // namespace citescope
