#ifndef CONTENTORACLE_BROWSER_MODEL_HPP
#define CONTENTORACLE_BROWSER_MODEL_HPP

// Data-driven models of how a browser handles a response, and a differential
// runner that compares two models over an enumerated request space.
//
// Tree text format: one node per line, indentation shows nesting, the yes
// branch precedes the no branch.
//   ? <field> set|unset
//   ? <field> ==|!= <literal or @field>
//   ? <field> in <literal>,<literal>,...
//   ! <Action>
// '#' starts a comment.

#include <algorithm>
#include <array>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "contentoracle/error.hpp"
#include "contentoracle/mime.hpp"
#include "json.hpp"

namespace contentoracle
{

enum class Disposition
{
    None,
    Inline,
    Attachment,
};

inline std::string_view to_string(Disposition d)
{
    switch (d) {
    case Disposition::None: return "none";
    case Disposition::Inline: return "inline";
    case Disposition::Attachment: return "attachment";
    }
    return "?";
}

inline std::optional<Disposition> parse_disposition(std::string_view s)
{
    const std::string lower = detail::ascii_lower(s);
    if (lower == "none") return Disposition::None;
    if (lower == "inline") return Disposition::Inline;
    if (lower == "attachment") return Disposition::Attachment;
    return std::nullopt;
}

/// The identification-relevant facts of one HTTP response plus the browser
/// settings that steer its handling.
struct RequestContext
{
    std::optional<MimeType> sniffed_mime;
    std::optional<MimeType> extension_mime;
    std::optional<MimeType> content_type;
    Disposition content_disposition = Disposition::None;
    bool nosniff = false;
    bool auto_download = false;
    bool auto_open = false;

    friend bool operator==(const RequestContext&, const RequestContext&) = default;
};

enum class Action
{
    Render,
    Download,
    PromptDocType,
    PromptMime,
    OpenWithApp,
    AutoOpen,
};

inline constexpr std::array<std::string_view, 6> kActionNames = {
    "Render", "Download", "PromptDocType", "PromptMime", "OpenWithApp", "AutoOpen",
};

inline std::string_view to_string(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }

inline std::optional<Action> parse_action(std::string_view s)
{
    for (std::size_t i = 0; i < kActionNames.size(); ++i) {
        if (kActionNames[i] == s) {
            return static_cast<Action>(i);
        }
    }
    return std::nullopt;
}

enum class Field
{
    SniffedMime,
    ExtensionMime,
    ContentType,
    ContentDisposition,
    Nosniff,
    AutoDownload,
    AutoOpen,
};

inline constexpr std::array<std::string_view, 7> kFieldNames = {
    "sniffed_mime", "extension_mime", "content_type", "content_disposition",
    "nosniff", "auto_download", "auto_open",
};

inline std::string_view to_string(Field f) { return kFieldNames[static_cast<std::size_t>(f)]; }

inline std::optional<Field> parse_field(std::string_view s)
{
    for (std::size_t i = 0; i < kFieldNames.size(); ++i) {
        if (kFieldNames[i] == s) {
            return static_cast<Field>(i);
        }
    }
    return std::nullopt;
}

enum class FieldKind { Mime, Disposition, Boolean };

inline FieldKind kind_of(Field f)
{
    switch (f) {
    case Field::SniffedMime:
    case Field::ExtensionMime:
    case Field::ContentType: return FieldKind::Mime;
    case Field::ContentDisposition: return FieldKind::Disposition;
    default: return FieldKind::Boolean;
    }
}

/// Canonical string value of a field; absent mimes are nullopt. Sniffing is
/// suppressed under nosniff, so sniffed_mime then reads as absent.
inline std::optional<std::string> field_value(const RequestContext& ctx, Field f)
{
    auto mime = [](const std::optional<MimeType>& m) -> std::optional<std::string> {
        if (!m) return std::nullopt;
        return m->essence();
    };
    switch (f) {
    case Field::SniffedMime: return ctx.nosniff ? std::nullopt : mime(ctx.sniffed_mime);
    case Field::ExtensionMime: return mime(ctx.extension_mime);
    case Field::ContentType: return mime(ctx.content_type);
    case Field::ContentDisposition: return std::string(to_string(ctx.content_disposition));
    case Field::Nosniff: return ctx.nosniff ? "true" : "false";
    case Field::AutoDownload: return ctx.auto_download ? "true" : "false";
    case Field::AutoOpen: return ctx.auto_open ? "true" : "false";
    }
    return std::nullopt;
}

struct Predicate
{
    enum class Op { Set, Unset, Eq, Ne, In };

    Field field;
    Op op;
    std::optional<Field> other;        // "@field" operand
    std::vector<std::string> literals; // canonical literal operand(s)

    bool test(const RequestContext& ctx) const
    {
        const auto value = field_value(ctx, field);
        switch (op) {
        case Op::Set: return value.has_value();
        case Op::Unset: return !value.has_value();
        case Op::Eq:
        case Op::Ne: {
            const auto rhs = other ? field_value(ctx, *other)
                                   : std::optional<std::string>(literals.front());
            return (value == rhs) == (op == Op::Eq);
        }
        case Op::In:
            return value && std::find(literals.begin(), literals.end(), *value) != literals.end();
        }
        return false;
    }
};

class DecisionTree
{
public:
    struct Node
    {
        std::variant<Predicate, Action> content;
        std::size_t yes = 0;
        std::size_t no = 0;
        std::size_t line = 0;
    };

    DecisionTree() = default;

    /// A tree made of one leaf.
    static DecisionTree leaf(std::string name, Action action)
    {
        DecisionTree t;
        t.name_ = std::move(name);
        t.nodes_.push_back({action, 0, 0, 0});
        return t;
    }

    const std::string& name() const noexcept { return name_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    Action run(const RequestContext& ctx) const
    {
        std::size_t i = 0;
        for (;;) {
            const Node& n = nodes_.at(i);
            if (const auto* action = std::get_if<Action>(&n.content)) {
                return *action;
            }
            i = std::get<Predicate>(n.content).test(ctx) ? n.yes : n.no;
        }
    }

    /// Leaf actions reachable in this tree, in node order.
    std::vector<Action> leaves() const
    {
        std::vector<Action> out;
        for (const auto& n : nodes_) {
            if (const auto* a = std::get_if<Action>(&n.content)) {
                out.push_back(*a);
            }
        }
        return out;
    }

    friend DecisionTree load_tree(std::istream& in, std::string name);

private:
    std::string name_;
    std::vector<Node> nodes_;
};

namespace detail
{

struct TreeLine
{
    std::size_t number;
    std::size_t indent;
    std::string text;
};

inline std::string canonical_literal(FieldKind kind, std::string_view raw, std::size_t line)
{
    switch (kind) {
    case FieldKind::Mime: {
        const auto m = try_parse_mime_type(raw);
        if (!m) {
            throw MalformedTree(line, "invalid media type literal '" + std::string(raw) + "'");
        }
        return m->essence();
    }
    case FieldKind::Disposition: {
        const auto d = parse_disposition(raw);
        if (!d) {
            throw MalformedTree(line, "invalid disposition '" + std::string(raw) + "'");
        }
        return std::string(to_string(*d));
    }
    case FieldKind::Boolean:
        if (raw != "true" && raw != "false") {
            throw MalformedTree(line, "boolean literal must be true or false");
        }
        return std::string(raw);
    }
    return std::string(raw);
}

inline Predicate parse_predicate(std::string_view text, std::size_t line)
{
    std::istringstream in{std::string(text)};
    std::string field_name, op_name, operand;
    in >> field_name >> op_name;
    std::getline(in, operand);
    const std::string_view value = trim(operand);

    const auto field = parse_field(field_name);
    if (!field) {
        throw MalformedTree(line, "unknown predicate field '" + field_name + "'");
    }
    Predicate p{*field, Predicate::Op::Set, std::nullopt, {}};
    const FieldKind kind = kind_of(*field);

    if (op_name == "set" || op_name == "unset") {
        if (kind != FieldKind::Mime) {
            throw MalformedTree(line, "'" + op_name + "' applies to media type fields only");
        }
        if (!value.empty()) {
            throw MalformedTree(line, "'" + op_name + "' takes no operand");
        }
        p.op = op_name == "set" ? Predicate::Op::Set : Predicate::Op::Unset;
        return p;
    }
    if (value.empty()) {
        throw MalformedTree(line, "missing operand for '" + op_name + "'");
    }
    if (op_name == "==" || op_name == "!=") {
        p.op = op_name == "==" ? Predicate::Op::Eq : Predicate::Op::Ne;
        if (value.front() == '@') {
            const auto other = parse_field(value.substr(1));
            if (!other) {
                throw MalformedTree(line, "unknown field reference '" + std::string(value) + "'");
            }
            if (kind_of(*other) != kind) {
                throw MalformedTree(line, "field reference of a different kind");
            }
            p.other = other;
        } else {
            p.literals.push_back(canonical_literal(kind, value, line));
        }
        return p;
    }
    if (op_name == "in") {
        p.op = Predicate::Op::In;
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            if (item.empty()) {
                throw MalformedTree(line, "empty item in 'in' list");
            }
            p.literals.push_back(canonical_literal(kind, item, line));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        return p;
    }
    throw MalformedTree(line, "unknown operator '" + op_name + "'");
}

} // namespace detail

/// Parses and validates a tree: every predicate has both branches and every
/// path ends at a leaf. Throws MalformedTree.
inline DecisionTree load_tree(std::istream& in, std::string name)
{
    std::vector<detail::TreeLine> lines;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        std::string_view content = raw;
        if (const auto hash = content.find('#'); hash != std::string_view::npos) {
            content = content.substr(0, hash);
        }
        if (detail::trim(content).empty()) {
            continue;
        }
        const auto indent = content.find_first_not_of(' ');
        if (content[indent] == '\t') {
            throw MalformedTree(number, "tabs are not allowed in indentation");
        }
        lines.push_back({number, indent, std::string(detail::trim(content))});
    }
    if (lines.empty()) {
        throw MalformedTree(number, "empty tree");
    }

    DecisionTree tree;
    tree.name_ = std::move(name);
    std::size_t cursor = 0;

    // Returns the index of the node built from lines[cursor].
    auto parse = [&](auto&& self, std::size_t indent) -> std::size_t {
        const auto& line = lines[cursor];
        if (line.indent != indent) {
            throw MalformedTree(line.number, "unexpected indentation");
        }
        const std::size_t index = tree.nodes_.size();
        tree.nodes_.push_back({Action::Download, 0, 0, line.number});
        ++cursor;

        const char marker = line.text.front();
        const std::string_view body = detail::trim(std::string_view(line.text).substr(1));
        if (marker == '!') {
            const auto action = parse_action(body);
            if (!action) {
                throw MalformedTree(line.number, "unknown action '" + std::string(body) + "'");
            }
            tree.nodes_[index].content = *action;
            return index;
        }
        if (marker != '?') {
            throw MalformedTree(line.number, "line must start with '?' or '!'");
        }
        Predicate predicate = detail::parse_predicate(body, line.number);
        if (cursor >= lines.size() || lines[cursor].indent <= indent) {
            throw MalformedTree(line.number, "predicate is missing its 'yes' branch");
        }
        const std::size_t child_indent = lines[cursor].indent;
        const std::size_t yes = self(self, child_indent);
        if (cursor >= lines.size() || lines[cursor].indent != child_indent) {
            throw MalformedTree(line.number, "predicate is missing its 'no' branch");
        }
        const std::size_t no = self(self, child_indent);
        tree.nodes_[index].content = std::move(predicate);
        tree.nodes_[index].yes = yes;
        tree.nodes_[index].no = no;
        return index;
    };
    parse(parse, lines.front().indent);
    if (cursor != lines.size()) {
        throw MalformedTree(lines[cursor].number, "content after the end of the tree");
    }
    return tree;
}

inline DecisionTree load_tree(std::string_view text, std::string name)
{
    std::istringstream in{std::string(text)};
    return load_tree(in, std::move(name));
}

inline Action run(const DecisionTree& tree, const RequestContext& ctx) { return tree.run(ctx); }

/// Media types used to enumerate the mime-valued fields; nullopt is "absent".
using MimePanel = std::vector<std::optional<MimeType>>;

inline MimePanel default_panel()
{
    return {parse_mime_type("application/pdf"), parse_mime_type("text/html"),
            parse_mime_type("text/javascript"), parse_mime_type("image/gif"),
            parse_mime_type("application/zip"), std::nullopt};
}

/// Cartesian product: panel^3 mimes x 3 dispositions x 2^3 booleans.
inline std::vector<RequestContext> enumerate_grid(const MimePanel& panel = default_panel())
{
    std::vector<RequestContext> grid;
    grid.reserve(panel.size() * panel.size() * panel.size() * 3 * 8);
    constexpr std::array dispositions = {Disposition::None, Disposition::Inline,
                                         Disposition::Attachment};
    for (const auto& sniffed : panel) {
        for (const auto& extension : panel) {
            for (const auto& declared : panel) {
                for (const auto disposition : dispositions) {
                    for (int bits = 0; bits < 8; ++bits) {
                        grid.push_back({sniffed, extension, declared, disposition,
                                        (bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0});
                    }
                }
            }
        }
    }
    return grid;
}

struct Divergence
{
    RequestContext context;
    Action a;
    Action b;
};

/// Grid points where the two trees disagree, in grid order regardless of
/// how many threads did the work.
inline std::vector<Divergence> differential(const DecisionTree& a, const DecisionTree& b,
                                            const std::vector<RequestContext>& grid,
                                            unsigned threads = 1)
{
    std::vector<std::optional<Divergence>> slots(grid.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Action x = a.run(grid[i]);
            const Action y = b.run(grid[i]);
            if (x != y) {
                slots[i] = Divergence{grid[i], x, y};
            }
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || grid.size() < 2) {
        work(0, grid.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (grid.size() + threads - 1) / threads;
        for (std::size_t begin = 0; begin < grid.size(); begin += chunk) {
            pool.emplace_back(work, begin, std::min(grid.size(), begin + chunk));
        }
    }
    std::vector<Divergence> out;
    for (auto& slot : slots) {
        if (slot) {
            out.push_back(std::move(*slot));
        }
    }
    return out;
}

inline nlohmann::json to_json(const RequestContext& ctx)
{
    auto mime = [](const std::optional<MimeType>& m) -> nlohmann::json {
        if (!m) return nullptr;
        return m->essence();
    };
    return {{"auto_download", ctx.auto_download},
            {"auto_open", ctx.auto_open},
            {"content_disposition", to_string(ctx.content_disposition)},
            {"content_type", mime(ctx.content_type)},
            {"extension_mime", mime(ctx.extension_mime)},
            {"nosniff", ctx.nosniff},
            {"sniffed_mime", mime(ctx.sniffed_mime)}};
}

/// Missing keys take their defaults (absent / none / false). Throws Error on
/// unknown keys or ill-typed values.
inline RequestContext request_context_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error("request context must be a JSON object");
    }
    RequestContext ctx;
    for (const auto& [key, value] : j.items()) {
        const auto field = parse_field(key);
        if (!field) {
            throw Error("unknown request context field '" + key + "'");
        }
        switch (kind_of(*field)) {
        case FieldKind::Mime: {
            std::optional<MimeType> m;
            if (!value.is_null()) {
                if (!value.is_string()) {
                    throw Error("field '" + key + "' must be a media type string or null");
                }
                m = parse_mime_type(value.get<std::string>());
            }
            if (*field == Field::SniffedMime) ctx.sniffed_mime = m;
            else if (*field == Field::ExtensionMime) ctx.extension_mime = m;
            else ctx.content_type = m;
            break;
        }
        case FieldKind::Disposition: {
            const auto d = value.is_string() ? parse_disposition(value.get<std::string>())
                                             : std::nullopt;
            if (!d) {
                throw Error("content_disposition must be none, inline or attachment");
            }
            ctx.content_disposition = *d;
            break;
        }
        case FieldKind::Boolean:
            if (!value.is_boolean()) {
                throw Error("field '" + key + "' must be a boolean");
            }
            if (*field == Field::Nosniff) ctx.nosniff = value.get<bool>();
            else if (*field == Field::AutoDownload) ctx.auto_download = value.get<bool>();
            else ctx.auto_open = value.get<bool>();
            break;
        }
    }
    return ctx;
}

} // namespace contentoracle

#endif // CONTENTORACLE_BROWSER_MODEL_HPP
