#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nag/synth.hpp"
#include "nag/tasks.hpp"
#include "nag/train.hpp"

namespace nag {

// trim + casefold + collapse internal whitespace.
inline std::string normalize_answer(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (const char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

inline int score_exact(std::string_view pred, std::string_view gold) {
    return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

// Strict integer parse of a normalized prediction; nullopt when the text is
// not a plain (optionally signed) decimal integer.
inline std::optional<long long> parse_int_answer(std::string_view text) {
    const std::string norm = normalize_answer(text);
    if (norm.empty()) {
        return std::nullopt;
    }
    std::size_t i = 0;
    if (norm[0] == '+' || norm[0] == '-') {
        i = 1;
    }
    if (i >= norm.size()) {
        return std::nullopt;
    }
    long long value = 0;
    for (; i < norm.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(norm[i]))) {
            return std::nullopt;
        }
        value = value * 10 + (norm[i] - '0');
    }
    return norm[0] == '-' ? -value : value;
}

// |pred - gold| when the prediction parses as an integer; nullopt marks the
// sample excluded from the absolute-error mean.
inline std::optional<double> score_abs_err(std::string_view pred, long long gold) {
    const auto parsed = parse_int_answer(pred);
    if (!parsed) {
        return std::nullopt;
    }
    return std::abs(static_cast<double>(*parsed - gold));
}

inline std::set<std::string> split_name_set(std::string_view text) {
    std::set<std::string> out;
    std::string current;
    auto flush = [&] {
        const std::string norm = normalize_answer(current);
        if (!norm.empty()) {
            out.insert(norm);
        }
        current.clear();
    };
    for (const char c : text) {
        if (c == ',') {
            flush();
        } else {
            current += c;
        }
    }
    flush();
    return out;
}

// Set F1 between the comma-separated prediction and the gold name set.
inline double score_set_f1(std::string_view pred, const std::vector<std::string>& gold_names) {
    const std::set<std::string> cand = split_name_set(pred);
    std::set<std::string> gold;
    for (const std::string& g : gold_names) {
        gold.insert(normalize_answer(g));
    }
    if (gold.empty() && cand.empty()) {
        return 1.0;
    }
    if (gold.empty() || cand.empty()) {
        return 0.0;
    }
    int hit = 0;
    for (const std::string& c : cand) {
        hit += gold.contains(c) ? 1 : 0;
    }
    if (hit == 0) {
        return 0.0;
    }
    const double precision = static_cast<double>(hit) / static_cast<double>(cand.size());
    const double recall = static_cast<double>(hit) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

inline int score_hit_at_1(std::string_view pred, const std::vector<std::string>& alternatives) {
    if (alternatives.empty()) {
        throw std::invalid_argument("hit@1 requires at least one gold alternative");
    }
    const std::string norm = normalize_answer(pred);
    for (const std::string& alt : alternatives) {
        if (norm == normalize_answer(alt)) {
            return 1;
        }
    }
    return 0;
}

enum class LinearizeTemplate { tuple_style, csv_style };

// Baseline prompt builders: the graph rendered as text plus the question,
// for prompting an unmodified language model.
inline std::string linearize_prompt(const TaskSample& sample, LinearizeTemplate tmpl) {
    const TextGraph& g = sample.graph;
    std::string out;
    if (tmpl == LinearizeTemplate::tuple_style) {
        out += "Graph Description:\n";
        out +=
            "In an undirected graph, (s, p, o) means that node s and node o are connected with "
            "an undirected edge of type p.\n";
        out += "G describes a graph among nodes: ";
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            out += g.nodes[i].text;
        }
        out += "\nThe edges in G are: ";
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            const int s = g.node_index(g.edges[i].src);
            const int d = g.node_index(g.edges[i].dst);
            out += "(" + g.nodes[static_cast<std::size_t>(s)].text + ", " + g.edges[i].text +
                   ", " + g.nodes[static_cast<std::size_t>(d)].text + ")";
        }
        out += "\n";
    } else {
        out += "Graph Description:\n";
        out += "In a directed graph G:\n";
        out += "node_id, node_attr means the node index and its attribute in the graph.\n";
        out += "example: 1, \"attribute text\"\n";
        out +=
            "src, edge_attr, dst means that node src and node dst are connected with a directed "
            "edge of type edge_attr.\n";
        out += "example: 5, \"relation\", 10\n";
        out += "The nodes, and its attributes in G are:\n";
        out += "node_id,node_attr\n";
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            out += std::to_string(i) + ", \"" + g.nodes[i].text + "\"\n";
        }
        out += "The edges in G are:\n";
        out += "src,edge_attr,dst\n";
        for (const Edge& e : g.edges) {
            out += std::to_string(g.node_index(e.src)) + ", \"" + e.text + "\", " +
                   std::to_string(g.node_index(e.dst)) + "\n";
        }
    }
    out += "Question:\n";
    out += sample.question;
    out += "\nConstraint:\n";
    out += "Please provide a direct answer to the question.\n";
    out += "Answer:\n";
    return out;
}

struct TaskAggregate {
    int n = 0;
    double acc = 0.0;
    std::optional<double> abs_err;
    int abs_err_excluded = 0;
    std::optional<double> f1;
};

struct EvalReport {
    std::string checkpoint;
    std::string split;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::map<std::string, TaskAggregate> per_task;
};

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json per_task = nlohmann::json::object();
    for (const auto& [task, agg] : r.per_task) {
        per_task[task] = {{"n", agg.n},
                          {"acc", agg.acc},
                          {"abs_err", agg.abs_err ? nlohmann::json(*agg.abs_err)
                                                  : nlohmann::json(nullptr)},
                          {"abs_err_excluded", agg.abs_err_excluded},
                          {"f1", agg.f1 ? nlohmann::json(*agg.f1) : nlohmann::json(nullptr)}};
    }
    return {{"checkpoint", r.checkpoint},
            {"split", r.split},
            {"seed", r.seed},
            {"config", r.config},
            {"per_task", per_task}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.checkpoint = j.value("checkpoint", "");
    r.split = j.value("split", "");
    r.seed = j.value("seed", 0ULL);
    r.config = j.value("config", nlohmann::json::object());
    for (const auto& [task, agg] : j.at("per_task").items()) {
        TaskAggregate a;
        a.n = agg.at("n").get<int>();
        a.acc = agg.at("acc").get<double>();
        if (!agg.at("abs_err").is_null()) {
            a.abs_err = agg.at("abs_err").get<double>();
        }
        a.abs_err_excluded = agg.at("abs_err_excluded").get<int>();
        if (!agg.at("f1").is_null()) {
            a.f1 = agg.at("f1").get<double>();
        }
        r.per_task[task] = a;
    }
    return r;
}

namespace detail {

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace detail

using Predictor = std::function<std::string(const TaskSample&)>;

// Runs the predictor over every sample (parallel across samples) and
// aggregates the task-appropriate scores in sample order.
inline EvalReport evaluate(const Predictor& predict, const std::vector<TaskSample>& samples,
                           int threads = 1) {
    std::vector<std::string> preds(samples.size());
    parallel_for(static_cast<int>(samples.size()), threads,
                 [&](int i) { preds[static_cast<std::size_t>(i)] =
                                  predict(samples[static_cast<std::size_t>(i)]); });

    struct Accumulator {
        int n = 0;
        detail::KahanSum acc;
        detail::KahanSum abs_err;
        int abs_err_n = 0;
        int abs_err_excluded = 0;
        detail::KahanSum f1;
        int f1_n = 0;
    };
    std::map<std::string, Accumulator> by_task;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const TaskSample& s = samples[i];
        const std::string& pred = preds[i];
        Accumulator& a = by_task[task_name(s.task)];
        ++a.n;
        a.acc.add(score_exact(pred, s.answer));
        if (task_is_numeric(s.task)) {
            if (const auto gold = parse_int_answer(s.answer)) {
                if (const auto err = score_abs_err(pred, *gold)) {
                    a.abs_err.add(*err);
                    ++a.abs_err_n;
                } else {
                    ++a.abs_err_excluded;
                }
            }
        }
        if (s.task == TaskKind::connected_nodes) {
            const OracleAnswer oracle = solve_task(s.graph, s.task, s.focus);
            a.f1.add(score_set_f1(pred, oracle.names));
            ++a.f1_n;
        }
    }

    EvalReport report;
    for (const auto& [task, a] : by_task) {
        TaskAggregate agg;
        agg.n = a.n;
        agg.acc = a.n > 0 ? a.acc.sum / a.n : 0.0;
        if (a.abs_err_n > 0) {
            agg.abs_err = a.abs_err.sum / a.abs_err_n;
        }
        agg.abs_err_excluded = a.abs_err_excluded;
        if (a.f1_n > 0) {
            agg.f1 = a.f1.sum / a.f1_n;
        }
        report.per_task[task] = agg;
    }
    return report;
}

// A predictor backed by a model checkpoint: flatten, greedy decode, detokenize.
inline Predictor model_predictor(const ModelWeights<float>& w, const ModelConfig& cfg,
                                 const Vocabulary& vocab, int max_new_tokens = 24) {
    return [&w, &cfg, &vocab, max_new_tokens](const TaskSample& sample) {
        const auto elements = unified_elements(sample.graph, ElementOrder::as_given());
        GenerateOptions opts;
        opts.max_new_tokens = max_new_tokens;
        return generate_answer(w, cfg, vocab, sample.graph, elements, sample.question, opts);
    };
}

// One bar chart per task showing its metrics.
inline void write_report_charts(const EvalReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [task, agg] : report.per_task) {
        std::vector<std::pair<std::string, double>> bars;
        bars.push_back({"acc", agg.acc});
        if (agg.f1) {
            bars.push_back({"f1", *agg.f1});
        }
        if (agg.abs_err) {
            // bar height on a 1/(1+x) scale; label carries the raw value
            bars.push_back({"abs_err=" + std::to_string(*agg.abs_err),
                            1.0 / (1.0 + *agg.abs_err)});
        }
        const int bar_w = 90;
        const int gap = 30;
        const int height = 240;
        const int width = gap + static_cast<int>(bars.size()) * (bar_w + gap);
        std::ofstream out(dir / (task + ".svg"));
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
            << height + 60 << "\">\n";
        out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"15\">" << task << " (n=" << agg.n
            << ")</text>\n";
        int x = gap;
        for (const auto& [label, value] : bars) {
            const int h = static_cast<int>(value * (height - 40));
            out << "<rect x=\"" << x << "\" y=\"" << 30 + (height - 40 - h) << "\" width=\""
                << bar_w << "\" height=\"" << h << "\" fill=\"#4878cf\"/>\n";
            out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << height + 10
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
                << label << "</text>\n";
            out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << 30 + (height - 44 - h)
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
                << (value == static_cast<int>(value) ? std::to_string(static_cast<int>(value))
                                                     : std::to_string(value).substr(0, 5))
                << "</text>\n";
            x += bar_w + gap;
        }
        out << "</svg>\n";
    }
}

}  // namespace nag
