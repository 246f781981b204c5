#ifndef CONTENTORACLE_POLICY_HPP
#define CONTENTORACLE_POLICY_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contentoracle/active_registry.hpp"
#include "contentoracle/attribute_store.hpp"
#include "contentoracle/discrepancy.hpp"
#include "contentoracle/view_registry.hpp"
#include "json.hpp"

namespace contentoracle
{

/// Which applications may be invoked on one file. An empty allow list means
/// nothing was recorded; denying everything is a separate, explicit state.
class HandlerPolicy
{
public:
    enum class Mode
    {
        Unrestricted,
        AllowList,
        DenyAll,
    };

    static HandlerPolicy unrestricted() { return {}; }

    static HandlerPolicy allow_only(std::vector<std::string> apps)
    {
        HandlerPolicy p;
        if (!apps.empty()) {
            p.mode_ = Mode::AllowList;
            p.allowed_ = std::move(apps);
        }
        return p;
    }

    static HandlerPolicy deny_all()
    {
        HandlerPolicy p;
        p.mode_ = Mode::DenyAll;
        return p;
    }

    Mode mode() const noexcept { return mode_; }
    const std::vector<std::string>& allowed() const noexcept { return allowed_; }
    bool restricts() const noexcept { return mode_ != Mode::Unrestricted; }

    bool permits(std::string_view app) const
    {
        switch (mode_) {
        case Mode::Unrestricted: return true;
        case Mode::DenyAll: return false;
        case Mode::AllowList:
            return std::find(allowed_.begin(), allowed_.end(), app) != allowed_.end();
        }
        return false;
    }

    friend bool operator==(const HandlerPolicy&, const HandlerPolicy&) = default;

private:
    Mode mode_ = Mode::Unrestricted;
    std::vector<std::string> allowed_;
};

inline std::string encode_handler_policy(const HandlerPolicy& p)
{
    nlohmann::json j = {{"v", 1}};
    if (p.mode() == HandlerPolicy::Mode::DenyAll) {
        j["deny_all"] = true;
    } else {
        j["allowed"] = p.allowed();
    }
    return j.dump();
}

inline HandlerPolicy decode_handler_policy(std::string_view text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("deny_all", false)) {
            return HandlerPolicy::deny_all();
        }
        return HandlerPolicy::allow_only(j.at("allowed").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed policy attribute: ") + e.what());
    }
}

/// Persists under user.contentoracle.policy. An unrestricted policy removes
/// the attribute.
inline void set_handler_policy(AttributeStore& store, const fs::path& path,
                               const HandlerPolicy& policy)
{
    detail::require_file(path);
    FileLock lock(path, FileLock::Mode::Exclusive);
    if (!policy.restricts()) {
        store.remove(path, kPolicyAttribute);
        return;
    }
    store.set(path, kPolicyAttribute, encode_handler_policy(policy));
}

inline void set_allowed_handlers(AttributeStore& store, const fs::path& path,
                                 std::vector<std::string> apps)
{
    set_handler_policy(store, path, HandlerPolicy::allow_only(std::move(apps)));
}

inline HandlerPolicy get_allowed_handlers(const AttributeStore& store, const fs::path& path)
{
    detail::require_file(path);
    const auto raw = store.get(path, kPolicyAttribute);
    if (!raw) {
        return HandlerPolicy::unrestricted();
    }
    return decode_handler_policy(*raw);
}

enum class Verdict
{
    Allow,
    Warn,
    Deny,
};

inline std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Allow: return "Allow";
    case Verdict::Warn: return "Warn";
    case Verdict::Deny: return "Deny";
    }
    return "?";
}

/// CLI exit status for a verdict.
inline int exit_code(Verdict v)
{
    switch (v) {
    case Verdict::Allow: return 0;
    case Verdict::Warn: return 1;
    case Verdict::Deny: return 2;
    }
    return 2;
}

struct PolicyDecision
{
    Verdict verdict = Verdict::Allow;
    std::vector<std::string> reasons;

    friend bool operator==(const PolicyDecision&, const PolicyDecision&) = default;
};

/// Handler restrictions first, then severity, with valid trust softening a
/// Critical finding to a warning (never to Allow).
inline PolicyDecision decide(const DiscrepancyReport& report, TrustState trust,
                             const std::optional<std::string>& handler,
                             const HandlerPolicy& policy)
{
    PolicyDecision d;
    if (handler && policy.restricts() && !policy.permits(*handler)) {
        d.verdict = Verdict::Deny;
        d.reasons.push_back(policy.mode() == HandlerPolicy::Mode::DenyAll
                                ? "handler:" + *handler + " denied (deny-all policy)"
                                : "handler:" + *handler + " not in allowed handlers");
        return d;
    }

    for (const auto& disc : report.discrepancies) {
        d.reasons.push_back(std::string(to_string(disc.severity)) + ":" +
                            std::string(to_string(disc.kind)));
    }

    const auto max = report.max_severity();
    if (max == Severity::Critical) {
        if (trust == TrustState::Trusted) {
            d.verdict = Verdict::Warn;
            d.reasons.push_back("trust:Trusted downgrades Critical to Warn");
        } else {
            d.verdict = Verdict::Deny;
            if (trust == TrustState::Invalidated) {
                d.reasons.push_back("trust:Invalidated");
            }
        }
        return d;
    }
    if (max == Severity::Warning || trust == TrustState::Invalidated) {
        d.verdict = Verdict::Warn;
        if (trust == TrustState::Invalidated) {
            d.reasons.push_back("trust:Invalidated");
        }
        return d;
    }
    d.verdict = Verdict::Allow;
    return d;
}

} // namespace contentoracle

#endif // CONTENTORACLE_POLICY_HPP
