#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace nag {

// Reserved token ids. Text tokenization can only produce word ids (>= 264)
// or byte-fallback ids (8..263), so the reserved band is never emitted for
// raw text.
namespace tok {
inline constexpr int pad = 0;
inline constexpr int end_of_answer = 1;
inline constexpr int graph_open = 2;   // <g>
inline constexpr int graph_close = 3;  // </g>
inline constexpr int node_open = 4;    // <n>
inline constexpr int node_close = 5;   // </n>
inline constexpr int edge_open = 6;    // <e>
inline constexpr int edge_close = 7;   // </e>
inline constexpr int byte_base = 8;
inline constexpr int first_word = byte_base + 256;

inline bool is_graph_tag(int id) { return id >= graph_open && id <= edge_close; }
inline bool is_reserved(int id) { return id >= 0 && id < first_word; }
}  // namespace tok

// Whitespace-plus-punctuation tokenizer over a corpus-built word list.
// Unknown words fall back to their raw bytes.
class Vocabulary {
public:
    Vocabulary() = default;

    static bool is_word_char(unsigned char c) {
        return std::isalnum(c) != 0 || c == '\'' || c == '-' || c >= 0x80;
    }

    // Splits into word runs and single punctuation characters.
    static std::vector<std::string> split_text(std::string_view text) {
        std::vector<std::string> parts;
        std::size_t i = 0;
        while (i < text.size()) {
            const unsigned char c = static_cast<unsigned char>(text[i]);
            if (std::isspace(c)) {
                ++i;
                continue;
            }
            if (is_word_char(c)) {
                std::size_t j = i;
                while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) {
                    ++j;
                }
                parts.emplace_back(text.substr(i, j - i));
                i = j;
            } else {
                parts.emplace_back(1, text[i]);
                ++i;
            }
        }
        return parts;
    }

    // Builds the word list from corpus text, most frequent first (ties by
    // lexicographic order). `max_size` caps the total vocabulary size
    // including the reserved band.
    static Vocabulary build(const std::vector<std::string>& corpus, std::size_t max_size = 2000) {
        std::map<std::string, std::int64_t> freq;
        for (const std::string& text : corpus) {
            for (std::string& w : split_text(text)) {
                ++freq[std::move(w)];
            }
        }
        std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) {
                return a.second > b.second;
            }
            return a.first < b.first;
        });
        Vocabulary v;
        const std::size_t budget =
            max_size > static_cast<std::size_t>(tok::first_word)
                ? max_size - static_cast<std::size_t>(tok::first_word)
                : 0;
        for (std::size_t i = 0; i < ranked.size() && i < budget; ++i) {
            v.add_word(ranked[i].first);
        }
        return v;
    }

    int size() const { return tok::first_word + static_cast<int>(words_.size()); }

    std::vector<int> tokenize(std::string_view text) const {
        std::vector<int> ids;
        for (const std::string& part : split_text(text)) {
            const auto it = index_.find(part);
            if (it != index_.end()) {
                ids.push_back(it->second);
            } else {
                for (const char c : part) {
                    ids.push_back(tok::byte_base + static_cast<unsigned char>(c));
                }
            }
        }
        return ids;
    }

    std::string token_name(int id) const {
        switch (id) {
            case tok::pad: return "<pad>";
            case tok::end_of_answer: return "<eoa>";
            case tok::graph_open: return "<g>";
            case tok::graph_close: return "</g>";
            case tok::node_open: return "<n>";
            case tok::node_close: return "</n>";
            case tok::edge_open: return "<e>";
            case tok::edge_close: return "</e>";
            default: break;
        }
        if (id >= tok::byte_base && id < tok::first_word) {
            return std::string(1, static_cast<char>(id - tok::byte_base));
        }
        const std::size_t w = static_cast<std::size_t>(id - tok::first_word);
        if (w >= words_.size()) {
            throw std::out_of_range("token id " + std::to_string(id) + " out of vocabulary");
        }
        return words_[w];
    }

    // Joins tokens back into display text: spaces between words, punctuation
    // attached to the previous token, byte runs concatenated.
    std::string detokenize(const std::vector<int>& ids) const {
        std::string out;
        bool prev_byte = false;
        for (const int id : ids) {
            if (id == tok::pad || id == tok::end_of_answer) {
                continue;
            }
            const std::string piece = token_name(id);
            const bool is_byte = id >= tok::byte_base && id < tok::first_word;
            const bool is_punct =
                piece.size() == 1 && !is_word_char(static_cast<unsigned char>(piece[0]));
            const bool glue = out.empty() || (is_byte && prev_byte) || (is_punct && !is_byte);
            if (!glue) {
                out += ' ';
            }
            out += piece;
            prev_byte = is_byte;
        }
        return out;
    }

    nlohmann::json to_json() const {
        return {{"format", "nag-vocab"}, {"version", 1}, {"words", words_}};
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("format", "") != "nag-vocab") {
            throw std::runtime_error("not a vocabulary file");
        }
        Vocabulary v;
        for (const auto& w : j.at("words")) {
            v.add_word(w.get<std::string>());
        }
        return v;
    }

    const std::vector<std::string>& words() const { return words_; }

private:
    void add_word(const std::string& w) {
        index_.emplace(w, size());
        words_.push_back(w);
    }

    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace nag
