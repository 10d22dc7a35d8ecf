#include "afem/quadrature.hpp"

#include "afem/common.hpp"

#include <cmath>

namespace afem {

namespace {

using Rule = std::vector<TriangleQuadPoint>;

void add_centroid(Rule& rule, double w)
{
    rule.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, w});
}

void add_s21(Rule& rule, double a, double w)
{
    const double b = 1.0 - 2.0 * a;
    rule.push_back({{a, a, b}, w});
    rule.push_back({{a, b, a}, w});
    rule.push_back({{b, a, a}, w});
}

void add_s111(Rule& rule, double a, double b, double w)
{
    const double c = 1.0 - a - b;
    rule.push_back({{a, b, c}, w});
    rule.push_back({{a, c, b}, w});
    rule.push_back({{b, a, c}, w});
    rule.push_back({{b, c, a}, w});
    rule.push_back({{c, a, b}, w});
    rule.push_back({{c, b, a}, w});
}

// Dunavant rules.
Rule make_rule(int degree)
{
    Rule r;
    switch (degree) {
    case 0:
    case 1:
        add_centroid(r, 1.0);
        break;
    case 2:
        add_s21(r, 1.0 / 6.0, 1.0 / 3.0);
        break;
    case 3:
    case 4:
        add_s21(r, 0.445948490915965, 0.223381589678011);
        add_s21(r, 0.091576213509771, 0.109951743655322);
        break;
    case 5:
        add_centroid(r, 0.225);
        add_s21(r, 0.470142064105115, 0.132394152788506);
        add_s21(r, 0.101286507323456, 0.125939180544827);
        break;
    case 6:
        add_s21(r, 0.249286745170910, 0.116786275726379);
        add_s21(r, 0.063089014491502, 0.050844906370207);
        add_s111(r, 0.310352451033785, 0.053145049844816, 0.082851075618374);
        break;
    case 7:
    case 8:
        add_centroid(r, 0.144315607677787);
        add_s21(r, 0.459292588292723, 0.095091634267285);
        add_s21(r, 0.170569307751760, 0.103217370534718);
        add_s21(r, 0.050547228317031, 0.032458497623198);
        add_s111(r, 0.008394777409958, 0.263112829634638, 0.027230314174435);
        break;
    default:
        throw Error("triangle_rule: degree " + std::to_string(degree) + " not supported");
    }
    // The tabulated weights carry 15 digits; renormalize so constants are exact.
    double sum = 0.0;
    for (const auto& q : r) sum += q.weight;
    for (auto& q : r) q.weight /= sum;
    return r;
}

std::vector<LineQuadPoint> make_gauss(int n)
{
    // Golub-Welsch would be overkill for n <= 5; Newton on P_n instead.
    std::vector<LineQuadPoint> pts(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 1 ? x : p1;
            const double pn1 = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pn1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        pts[n - 1 - i] = {0.5 * (x + 1.0), 0.5 * w};
    }
    return pts;
}

} // namespace

const std::vector<TriangleQuadPoint>& triangle_rule(int degree)
{
    static const std::array<Rule, 9> rules = [] {
        std::array<Rule, 9> all;
        for (int d = 0; d <= 8; ++d) all[d] = make_rule(d);
        return all;
    }();
    if (degree < 0 || degree > 8) throw Error("triangle_rule: degree " + std::to_string(degree) + " not supported");
    return rules[degree];
}

const std::vector<LineQuadPoint>& line_rule(int degree)
{
    static const std::array<std::vector<LineQuadPoint>, 5> rules = [] {
        std::array<std::vector<LineQuadPoint>, 5> all;
        for (int n = 1; n <= 5; ++n) all[n - 1] = make_gauss(n);
        return all;
    }();
    if (degree < 0 || degree > 9) throw Error("line_rule: degree " + std::to_string(degree) + " not supported");
    return rules[degree / 2];
}

} // namespace afem
