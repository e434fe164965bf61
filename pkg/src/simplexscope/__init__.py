"""Configuration sets, similarity search and configuration measures on
finite approximations of fractal sets.

Modules
-------
geometry
    distance vectors, similarity ratios, transform recovery
fractal
    iterated function systems, weighted point sets, dimension estimates
configmeasure
    configuration measures and sets, pair counts, similarity search
pushforward
    Haar rotations and the rotation-averaged difference-measure functional
pigeonhole
    explicit constants and verification for a measure pigeonhole bound
thresholds
    registry of published dimension thresholds
"""
from ._errors import DegenerateInputError, InvalidInputError, ResourceLimitError
from .configmeasure import (
    DeltaIndex,
    EmpiricalNu,
    ScanResult,
    SimilarityWitness,
    annulus_volume,
    delta_k,
    delta_k_r,
    find_multi_similarity,
    find_similar_pairs,
    joint_mass,
    mollified_nu_density,
    nu_mass_of_delta_r,
    pair_count,
    pinned_search,
    sample_nu,
    scan_r,
    similar_tuple_pairs,
)
from .fractal import (
    IFS,
    PRESETS,
    PointSet,
    SimilarityMap,
    box_dimension_estimate,
    frostman_surrogate,
    generate_points,
    preset,
    read_pointset_csv,
    similarity_dimension,
    write_pointset_csv,
)
from .geometry import (
    DistanceVector,
    SimilarityTransform,
    canonical_edge_set,
    distance_vector,
    edge_order,
    independent_edge_count,
    recover_transform,
    similarity_ratio,
    span_dimension,
)
from .pigeonhole import FiniteProbSpace, SetFamily, extract_pair, f_iter, n_bound, p_constant, verify_lemma
from .pushforward import (
    compare_sides,
    haar_rotation,
    haar_rotations,
    hoelder_check,
    lambda_Lk1_functional,
    lambda_pushforward,
)
from .thresholds import ThresholdEntry, threshold_lookup

__version__ = "0.1.0"
