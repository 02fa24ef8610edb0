//! Parsing BPPLIB, TSPLIB and CVRPLIB text.
//!
//! cargo run --example benchmark_loading

use eohs::instances::{parse_bpplib, parse_cvrplib, parse_tsplib};
use eohs::problems::{evaluate, Builtin};

const BPP: &str = "6\n100\n60\n50\n45\n40\n30\n20\n";

const TSP: &str = "NAME : square5
TYPE : TSP
DIMENSION : 5
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 100 0
3 100 100
4 0 100
5 50 40
EOF
";

const VRP: &str = "NAME : tiny
TYPE : CVRP
DIMENSION : 4
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 10
NODE_COORD_SECTION
1 50 50
2 10 10
3 90 10
4 50 90
DEMAND_SECTION
1 0
2 6
3 5
4 4
DEPOT_SECTION
1
-1
EOF
";

fn main() {
    let bpp = parse_bpplib("toy.txt", BPP).unwrap();
    let r = evaluate(&Builtin::FirstFit, &bpp);
    println!("{}: lower bound {}, first fit {} bins", bpp.id(), bpp.baseline(), r.raw);

    let tsp = parse_tsplib("square5", TSP).unwrap();
    let r = evaluate(&Builtin::TspNearest, &tsp);
    println!("{}: baseline {:.4}, nearest {:.4}, gap {:+.4}", tsp.id(), tsp.baseline(), r.raw, r.gap);

    let vrp = parse_cvrplib("tiny", VRP).unwrap();
    let r = evaluate(&Builtin::CvrpNearestFeasible, &vrp);
    println!("{}: baseline {:.4}, nearest feasible {:.4}, sequence {:?}", vrp.id(), vrp.baseline(), r.raw, r.trace);
}
