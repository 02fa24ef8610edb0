use super::*;
use crate::domain::{DistanceMatrix, Task};
use crate::instances::{generate, GeneratorSpec};
use crate::problems::{evaluate, Builtin};

fn obp(code: &str, item: f64, bins: &[f64]) -> Result<Decision, DecisionError> {
    let p = Program::parse(code, Task::Obp).unwrap();
    p.decide(&DecisionQuery::Obp { item, bins })
}

fn priorities(code: &str, item: f64, bins: &[f64]) -> Vec<f64> {
    match obp(code, item, bins).unwrap() {
        Decision::Priorities(p) => p,
        other => panic!("unexpected {other:?}"),
    }
}

fn body(expr: &str) -> String {
    format!("import numpy as np\ndef priority(item, bins):\n    return {expr}\n")
}

#[test]
fn builtin_sources_match_hand_written_rules() {
    for b in Builtin::ALL {
        let program = Program::parse(b.reference_source(), b.task()).unwrap();
        let instances = generate(&GeneratorSpec::small(b.task(), 6, 17)).unwrap();
        for inst in &instances {
            let want = evaluate(&b, inst);
            let got = evaluate(&program, inst);
            assert!(want.is_valid(), "{b}: {:?}", want.violation);
            assert_eq!(got, want, "{b} on {}", inst.id());
        }
    }
}

#[test]
fn arithmetic_follows_python() {
    let p = priorities(&body("bins // 3 + bins % 3 - 2 ** 3"), 1.0, &[7.0, -7.0]);
    assert_eq!(p, vec![2.0 + 1.0 - 8.0, -3.0 + 2.0 - 8.0]);
    let p = priorities(&body("-2 ** 2 + bins * 0"), 1.0, &[1.0]);
    assert_eq!(p, vec![-4.0]);
    let p = priorities(&body("np.where(bins > item, bins / item, -np.inf)"), 2.0, &[1.0, 4.0]);
    assert_eq!(p, vec![f64::NEG_INFINITY, 2.0]);
}

#[test]
fn scalar_result_is_broadcast() {
    assert_eq!(priorities(&body("item"), 3.0, &[5.0, 6.0]), vec![3.0, 3.0]);
}

#[test]
fn multi_line_bodies_and_docstrings() {
    let code = "import numpy as np\n\
                \n\
                def priority(item: float, bins: np.ndarray) -> np.ndarray:\n    \
                \"\"\"Prefer tight fits.\n    \
                Second line.\n    \
                \"\"\"\n    \
                # leftover space\n    \
                w_0 = 1.5\n    \
                slack = (bins -\n             item)\n    \
                slack *= w_0\n    \
                score = np.maximum(slack, 0) if item > 0 else slack  # inline comment\n    \
                return -score\n";
    assert_eq!(priorities(code, 2.0, &[3.0, 6.0]), vec![-1.5, -6.0]);
}

#[test]
fn reductions_and_indexing() {
    let d = DistanceMatrix::euclidean(&[[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]);
    let code = "import numpy as np\n\
                def select_next_node(current_node, destination_node, unvisited_nodes, distance_matrix):\n    \
                row = distance_matrix[current_node, unvisited_nodes]\n    \
                far = unvisited_nodes[np.argmax(row)]\n    \
                spread = np.max(distance_matrix, axis=1)[far]\n    \
                return far if spread > 0 else unvisited_nodes[0]\n";
    let p = Program::parse(code, Task::Tsp).unwrap();
    let q = DecisionQuery::Tsp {
        current: 0,
        destination: 0,
        unvisited: &[1, 2],
        distances: &d,
    };
    assert_eq!(p.decide(&q).unwrap(), Decision::Node(2));
}

#[test]
fn shape_errors_are_runtime_failures() {
    let err = obp(&body("bins[:2] + bins"), 1.0, &[1.0, 2.0, 3.0]).unwrap_err();
    assert!(err.0.contains("broadcast"), "{err}");
    let err = obp(&body("bins[5]"), 1.0, &[1.0]).unwrap_err();
    assert!(err.0.contains("out of bounds"), "{err}");
}

#[test]
fn routing_must_return_an_integer() {
    let d = DistanceMatrix::euclidean(&[[0.0, 0.0], [1.0, 0.0]]);
    let code = "def select_next_node(current_node, destination_node, unvisited_nodes, distance_matrix):\n    return 0.5\n";
    let p = Program::parse(code, Task::Tsp).unwrap();
    let q = DecisionQuery::Tsp {
        current: 0,
        destination: 0,
        unvisited: &[1],
        distances: &d,
    };
    assert!(p.decide(&q).is_err());
}

#[test]
fn unsupported_constructs_are_rejected() {
    let cases = [
        "def priority(item, bins):\n    for b in bins:\n        pass\n    return bins\n",
        "def priority(item, bins):\n    if item > 1:\n        return bins\n    return -bins\n",
        "def helper(x):\n    return x\ndef priority(item, bins):\n    return bins\n",
        "import numpy as np\ndef priority(item, bins):\n    return np.random.rand(len(bins))\n",
        "def priority(item, bins):\n    return sorted(bins)\n",
        "def priority(item, bins):\n    return bins.copy()\n",
        "def priority(item, bins):\n    return [b for b in bins]\n",
        "def priority(item, bins):\n    return scipy_thing\n",
        "import numpy as np\ndef priority(item, bins):\n    return np.sort(bins)\n",
        "def priority(item, bins):\n    x = 1\n    return bins\nprint(1)\n",
    ];
    for code in cases {
        match Program::parse(code, Task::Obp) {
            Err(InterpError::Unsupported(_)) => {}
            other => panic!("expected Unsupported for {code:?}, got {other:?}"),
        }
    }
}

#[test]
fn malformed_code_is_a_syntax_error() {
    for code in [
        "def priority(item):\n    return item\n",
        "def priority(item, bins):\n    return (bins\n",
        "def priority(item, bins):\n    return bins +\n",
    ] {
        assert!(
            matches!(Program::parse(code, Task::Obp), Err(InterpError::Syntax(_))),
            "{code:?}"
        );
    }
}

#[test]
fn module_aliases_are_tracked() {
    let code = "import numpy\nimport math as m\ndef priority(item, bins):\n    return numpy.log(bins) + m.sqrt(item)\n";
    let p = priorities(code, 4.0, &[1.0]);
    assert_eq!(p, vec![2.0]);
    let code = "def priority(item, bins):\n    return np.log(bins)\n";
    assert_eq!(priorities(code, 1.0, &[1.0]), vec![0.0]);
    let code = "import scipy as sp\ndef priority(item, bins):\n    return sp.log(bins)\n";
    assert!(matches!(Program::parse(code, Task::Obp), Err(InterpError::Unsupported(_))));
}

#[test]
fn python_round_is_half_even() {
    let p = priorities(&body("round(item) + bins * 0"), 2.5, &[0.0]);
    assert_eq!(p, vec![2.0]);
}
