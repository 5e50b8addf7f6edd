"""Generate crates/rankrepro/data/epl-2023-24-synthetic.csv.

A double round-robin of 380 matches whose per-team goals for and against equal the
2023-24 Premier League season totals. Match-level scores are synthetic.
"""

import csv
import random
from pathlib import Path

SEED = 20232024

# team: (goals for, goals against)
TOTALS = {
    "Man City": (96, 34),
    "Arsenal": (91, 29),
    "Liverpool": (86, 41),
    "Aston Villa": (76, 61),
    "Spurs": (74, 61),
    "Chelsea": (77, 63),
    "Newcastle": (85, 62),
    "Man Utd": (57, 58),
    "West Ham": (60, 74),
    "Crystal Palace": (57, 58),
    "Brighton": (55, 62),
    "Bournemouth": (54, 67),
    "Fulham": (55, 61),
    "Wolves": (50, 65),
    "Everton": (40, 51),
    "Brentford": (56, 65),
    "Nott'm Forest": (49, 67),
    "Luton": (52, 85),
    "Burnley": (41, 78),
    "Sheffield Utd": (35, 104),
}
HOME_SHARE = 0.55


def allocate(rng, teams):
    """Integer matrix goals[i][j] (i scoring against j, both legs) with the season margins."""
    k = len(teams)
    for _ in range(1000):
        gf = [TOTALS[t][0] for t in teams]
        ga = [TOTALS[t][1] for t in teams]
        goals = [[0] * k for _ in range(k)]
        ok = True
        for _ in range(sum(gf)):
            cells = [(i, j) for i in range(k) for j in range(k) if i != j and gf[i] and ga[j]]
            if not cells:
                ok = False
                break
            i, j = rng.choices(cells, weights=[gf[i] * ga[j] for i, j in cells])[0]
            goals[i][j] += 1
            gf[i] -= 1
            ga[j] -= 1
        if ok:
            return goals
    raise RuntimeError("no allocation found")


def main():
    rng = random.Random(SEED)
    teams = list(TOTALS)
    goals = allocate(rng, teams)
    k = len(teams)
    home = [[0] * k for _ in range(k)]  # home[i][j]: goals i scored at home against j
    for i in range(k):
        for j in range(k):
            if i != j:
                at_home = sum(rng.random() < HOME_SHARE for _ in range(goals[i][j]))
                home[i][j] = at_home
    rows = []
    for h in range(k):
        for a in range(k):
            if h != a:
                rows.append((teams[h], teams[a], home[h][a], goals[a][h] - home[a][h]))
    rng.shuffle(rows)
    out = Path(__file__).resolve().parent.parent / "crates/rankrepro/data/epl-2023-24-synthetic.csv"
    with out.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["home_id", "away_id", "home_goals", "away_goals"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
