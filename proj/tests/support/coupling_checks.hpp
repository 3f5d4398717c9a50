#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lllcsp/marginal.hpp"
#include "lllcsp/oracle.hpp"

namespace lllcsp::testing {

/// Checks the exact identities relating the coupling flows on a tree:
/// values in [0,1], unit root, conservation at internal nodes, the ratio
/// identity at every node, and (when eta <= 1/(2q)) the off-diagonal bound.
/// Returns an empty string on success, else a description of the first failure.
inline std::string check_flow_identities(const Instance& inst, const TruncatedTree& tree,
    const CouplingDistribution& cd, const std::optional<BigRational>& eta)
{
    const std::size_t size = tree.nodes.size();
    for (std::size_t i = 0; i < size; ++i)
        if (cd.px[i] < 0 || cd.px[i] > 1 || cd.py[i] < 0 || cd.py[i] > 1)
            return "flow outside [0,1] at node " + std::to_string(i);
    if (cd.px[0] != 1 || cd.py[0] != 1)
        return "root flow is not 1";

    for (std::size_t i = 0; i < size; ++i) {
        const auto& node = tree.nodes[i];
        if (node.kind != NodeKind::internal)
            continue;
        const auto d = static_cast<std::size_t>(inst.domain(node.next_var));
        auto child = [&](std::size_t a, std::size_t b) {
            return static_cast<std::size_t>(node.children[a * d + b]);
        };
        for (std::size_t a = 0; a < d; ++a) {
            BigRational sx = 0;
            BigRational sy = 0;
            for (std::size_t b = 0; b < d; ++b) {
                sx += cd.px[child(a, b)];
                sy += cd.py[child(b, a)];
            }
            if (sx != cd.px[i] || sy != cd.py[i])
                return "flow not conserved at node " + std::to_string(i);
        }
    }

    const auto& s0x = cd.sx[0];
    const auto& s0y = cd.sy[0];
    if (s0x > 0 && s0y > 0)
        for (std::size_t i = 0; i < size; ++i) {
            if (cd.py[i] == 0 || cd.sy[i] == 0)
                continue;
            BigRational lhs = BigRational(cd.sx[i]) * cd.px[i] / (BigRational(cd.sy[i]) * cd.py[i]);
            BigRational rhs(s0x, s0y);
            rhs.canonicalize();
            if (lhs != rhs)
                return "ratio identity fails at node " + std::to_string(i);
        }

    if (eta && *eta <= BigRational(1, 2 * inst.q()))
        for (std::size_t i = 0; i < size; ++i) {
            const auto& node = tree.nodes[i];
            if (node.kind != NodeKind::internal)
                continue;
            const auto d = static_cast<std::size_t>(inst.domain(node.next_var));
            const BigRational cap = 4 * inst.q() * *eta;
            for (std::size_t a = 0; a < d; ++a) {
                BigRational off_x = 0;
                BigRational off_y = 0;
                for (std::size_t b = 0; b < d; ++b) {
                    if (b == a)
                        continue;
                    off_x += cd.px[static_cast<std::size_t>(node.children[a * d + b])];
                    off_y += cd.py[static_cast<std::size_t>(node.children[b * d + a])];
                }
                if (off_x > cap * cd.px[i] || off_y > cap * cd.py[i])
                    return "off-diagonal flow exceeds 4 q eta at node " + std::to_string(i);
            }
        }
    return {};
}

} // namespace lllcsp::testing
