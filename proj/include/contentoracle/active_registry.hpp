#ifndef CONTENTORACLE_ACTIVE_REGISTRY_HPP
#define CONTENTORACLE_ACTIVE_REGISTRY_HPP

#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "contentoracle/error.hpp"
#include "contentoracle/mime.hpp"

namespace contentoracle
{

/// Central record of which media types execute. A type is active when it is
/// in the shipped base set or any application claims it (union semantics).
class ActiveRegistry
{
public:
    ActiveRegistry() = default;

    explicit ActiveRegistry(std::set<std::string> base_active)
        : base_(std::move(base_active))
    {
    }

    bool is_active(const MimeType& m) const
    {
        const std::string key = m.essence();
        if (base_.contains(key)) {
            return true;
        }
        for (const auto& [app, types] : claims_) {
            if (types.contains(key)) {
                return true;
            }
        }
        return false;
    }

    /// Returns a registry in which `app` additionally claims `types` active.
    [[nodiscard]] ActiveRegistry with_claims(std::string_view app,
                                             const std::vector<MimeType>& types) const
    {
        ActiveRegistry next = *this;
        auto& claimed = next.claims_[std::string(app)];
        for (const auto& m : types) {
            claimed.insert(m.essence());
        }
        return next;
    }

    const std::set<std::string>& base() const noexcept { return base_; }
    const std::map<std::string, std::set<std::string>>& claims() const noexcept { return claims_; }

private:
    std::set<std::string> base_;
    std::map<std::string, std::set<std::string>> claims_;
};

inline bool is_active(const MimeType& m, const ActiveRegistry& registry)
{
    return registry.is_active(m);
}

/// One media type per line, '#' comments. Throws LineError on a bad line.
inline ActiveRegistry load_active_set(std::istream& in)
{
    std::set<std::string> base;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto content = detail::trim(std::string_view(line).substr(0, line.find('#')));
        if (content.empty()) {
            continue;
        }
        const auto m = try_parse_mime_type(content);
        if (!m || !m->parameters.empty()) {
            throw LineError(number, "invalid media type '" + std::string(content) + "'");
        }
        base.insert(m->essence());
    }
    return ActiveRegistry(std::move(base));
}

inline ActiveRegistry load_active_set(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return load_active_set(in);
}

} // namespace contentoracle

#endif // CONTENTORACLE_ACTIVE_REGISTRY_HPP
