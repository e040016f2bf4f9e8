"""
Constants for airsubspace

Centralized constants used across all modules (filters, corpus tooling, harness).
"""

# Environment Variable Names
ENV_LOG_LEVEL = "AIRSUBSPACE_LOG_LEVEL"
ENV_LOG_LEVEL_FALLBACK = "LOG_LEVEL"
ENV_THREADS = "AIRSUBSPACE_THREADS"
ENV_DATA_DIR = "AIRSUBSPACE_DATA_DIR"

# Default Values
DEFAULT_THREADS = 1
DEFAULT_DATA_DIR = "data"

# Physical Constants
SPEED_OF_SOUND = 343.0  # m/s

# Frame Defaults (desk scale)
DEFAULT_FILTER_LENGTH = 256
DEFAULT_FRAME_SHIFT = 256
DEFAULT_FS = 8000

# Kalman Filter Defaults
KF_A_DEFAULT = 0.9999
KF_LAMBDA_W_DEFAULT = 0.9
KF_LAMBDA_N_DEFAULT = 0.5
KF_P0_BASELINE = 0.01
KF_P0_FUSION = 0.1
PSI_N_INIT = 1e-10               # observation noise PSD before the first block
INNOVATION_FLOOR = 1e-30         # floor on the per-bin innovation power D

# Fusion Defaults
K_TAU_DEFAULT = 80
BETA_PR_DEFAULT = 5.0
SEARCH_STRIDE_DEFAULT = 1

# Numerical Floors
UNCERTAINTY_FLOOR = 1e-12        # p entries before inversion in the KF distance
QR_RANK_TOL = 1e-8               # relative pivot magnitude for basis pruning
GRAM_COND_LIMIT = 1e12           # max cond(VᵀV) accepted for a subspace basis

# k-means
KMEANS_MAX_ITER = 300

# Image-Source Method
SINC_TAPS = 81                   # Hann-windowed sinc length (odd)
SINC_HALF_WIDTH = SINC_TAPS // 2
DELAY_OVERSAMPLE = 32            # fractional delay grid per sample

# Metrics
MISMATCH_FLOOR_DB = -200.0
ERLE_CEILING_DB = 200.0
ERLE_LAMBDA_DEFAULT = 0.99

# Scenario Synthesis
SPEECH_AR_ORDER = 8
SPEECH_POLE_RADIUS = 0.9
SPEECH_SYLLABLE_RATE = 4.0       # Hz, amplitude modulation
SPEECH_PAUSE_PROB = 0.25         # chance that a 250 ms segment is silent
SPEECH_SEGMENT_S = 0.25
CROSSFADE_S = 0.05
DEFAULT_DURATION_S = 10.0
DEFAULT_SWITCH_TIME_S = 5.0

# Seed Stream Keys (second SeedSequence entropy word)
SEED_STREAM_CORPUS = 1
SEED_STREAM_TEST = 2
SEED_STREAM_TRIAL = 3

# Training Set Binary Format
AIRS_MAGIC = b"AIRS"
AIRS_VERSION = 1
AIRS_HEADER_FORMAT = "<4sHIHIIQ"  # magic, version, K, B, L, fs, seed
AIRS_SIDECAR_SUFFIX = ".json"

# Experiment Output
CSV_COLUMNS = ("variant", "trial_agg", "block", "time_s", "mismatch_db", "erle_db")
MANIFEST_NAME = "manifest.json"
ANALYSIS_CSV_NAME = "analysis.csv"

# Logging
LOG_LEVEL_DEFAULT = "INFO"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Version
AIRSUBSPACE_VERSION = "1.0.0"
