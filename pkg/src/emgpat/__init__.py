"""Surface-EMG pattern analysis toolkit."""

__version__ = "0.1.0"

from .bundle import (EmgBundle, RepetitionSegment, SubjectMeta, TrialRecord,
                     read_bundle, segment_bundle, segment_repetitions,
                     write_bundle)
from .classify import (CvReport, LdaModel, cv_gesture,
                       cv_subject_group_signature, cv_subject_group_window,
                       lda_fit, lda_predict, welch_ttest)
from .cluster import Dendrogram, cut, inconsistency, ward_linkage
from .features import (FEATURE_NAMES, FeatureTensor, ThresholdSpec,
                       WindowingConfig, extract, mav, ssc, wl, windows, zc)
from .pca import PcaModel, pca_fit, pca_inverse, pca_transform
from .preprocess import (HampelConfig, despike_bundle, hampel_despike_spectrum,
                         trim_transitions)
from .signatures import (Standardizer, SubjectSignature, build_signature,
                         build_signatures, standardize)
from .synth import make_synthetic_bundle

__all__ = [name for name in dir() if not name.startswith("_")]
