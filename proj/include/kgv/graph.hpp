#pragma once

#include "kgv/corpus.hpp"
#include "kgv/embed.hpp"
#include "kgv/llm.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace kgv::graph {

struct Config {
    double similarity_threshold = 0.8;  // semantic edge when cosine is strictly greater
    int max_hops = 1;
    bool keyword_edges_enabled = true;
};

bool operator==(const Config& a, const Config& b);

enum class EdgeKind { Adjacent, Keyword, Semantic };

const char* to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(std::string_view s);

struct Node {
    std::string paragraph_id;
    std::string report_id;
    int ordinal = 0;
    embed::Vector embedding;
    std::vector<std::string> keywords;  // sorted, unique, lowercase
    std::string text;                   // in-memory only, not persisted
};

struct Edge {
    std::string src;  // src < dst canonical ordering
    std::string dst;
    EdgeKind kind = EdgeKind::Adjacent;
    double weight = 1.0;  // cosine score for Semantic edges
};

// Maps the many code names of one group onto a canonical lowercase form.
class AliasTable {
public:
    static AliasTable builtin();
    // Extends the builtin table with clusters from a JSON file:
    // {"canonical": ["alias", ...], ...}
    static AliasTable from_file(const std::string& path);

    void add_cluster(const std::string& canonical, const std::vector<std::string>& aliases);

    // Canonical name for a known alias; lowercase of the input otherwise.
    std::string normalize(std::string_view name) const;

    // The full lowercase cluster for a name (canonical first); a singleton
    // for unknown names.
    std::vector<std::string> expand(std::string_view name) const;

    const std::map<std::string, std::vector<std::string>>& clusters() const { return clusters_; }

private:
    std::map<std::string, std::string> canonical_;              // alias -> canonical
    std::map<std::string, std::vector<std::string>> clusters_;  // canonical -> aliases
};

struct ParagraphKG {
    Config config;
    std::vector<Node> nodes;  // sorted by paragraph_id
    std::vector<Edge> edges;  // sorted by (src, dst, kind), unique

    const Node* find(std::string_view paragraph_id) const;
    std::vector<std::string> neighbors(std::string_view paragraph_id) const;
    std::size_t connected_pair_count() const;  // multi-kind pairs counted once
};

struct SubKG {
    std::vector<std::string> node_ids;  // sorted, deterministic
    std::vector<std::string> seed_ids;
    std::vector<Edge> edges;  // induced

    std::string content_hash() const;
};

std::string keyword_prompt(const std::string& paragraph_text);

// Top-k paragraph tokens by term frequency (stop words are already gone from
// the token stream), ties broken lexicographically. With an LLM the keywords
// come from a prompt; on provider failure this falls back to the TF rule.
std::vector<std::string> extract_keywords(const corpus::Paragraph& paragraph,
                                          llm::Provider* llm = nullptr,
                                          std::size_t top_k = 5);

// One node per clue paragraph; adjacent edges between consecutive ordinals,
// keyword edges between keyword-sharing paragraphs, semantic edges where the
// embedding cosine exceeds the threshold (all pairs, cross-report included).
// parallelism 0 lets the implementation pick; results are identical to serial.
ParagraphKG build_graph(const std::vector<corpus::Report>& clue_reports,
                        embed::Provider& provider, const Config& config,
                        llm::Provider* llm = nullptr, int parallelism = 0);

// 2|E| / (|V| (|V|-1)) over distinct connected pairs.
double density(const ParagraphKG& kg);

// Seeds are nodes whose text or keywords mention any entity (case-insensitive,
// alias-expanded), grown by max_hops of neighbors with induced edges.
SubKG retrieve_subgraph(const ParagraphKG& kg, const std::vector<std::string>& entities,
                        const Config& config, const AliasTable& aliases = AliasTable::builtin());

// Copies paragraph texts into matching nodes (texts are not persisted).
void attach_texts(ParagraphKG& kg, const corpus::Corpus& corpus);

nlohmann::json to_json(const ParagraphKG& kg);
ParagraphKG kg_from_json(const nlohmann::json& j);
void save_kg(const ParagraphKG& kg, const std::string& path);
ParagraphKG load_kg(const std::string& path);

} // namespace kgv::graph
