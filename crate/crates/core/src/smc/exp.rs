//! Exponential for non-positive arguments, used on the O(N²) path.

/// `2^(i/64)`, correctly rounded.
const POW2_FRAC: [f64; 64] = [
    1.0,
    1.0108892860517005,
    1.0218971486541166,
    1.0330248790212284,
    1.0442737824274138,
    1.0556451783605572,
    1.0671404006768237,
    1.0787607977571199,
    1.0905077326652577,
    1.102382583307841,
    1.1143867425958924,
    1.1265216186082418,
    1.1387886347566916,
    1.1511892299529827,
    1.1637248587775775,
    1.1763969916502812,
    1.189207115002721,
    1.202156731452703,
    1.215247359980469,
    1.22848053610687,
    1.241857812073484,
    1.255380757024691,
    1.2690509571917332,
    1.2828700160787783,
    1.2968395546510096,
    1.3109612115247644,
    1.3252366431597413,
    1.339667524053303,
    1.3542555469368927,
    1.3690024229745905,
    1.383909881963832,
    1.3989796725383112,
    core::f64::consts::SQRT_2,
    1.42961333839197,
    1.4451808069770467,
    1.460917794180647,
    1.4768261459394993,
    1.4929077282912648,
    1.5091644275934228,
    1.5255981507445384,
    1.5422108254079407,
    1.559004400237837,
    1.5759808451078865,
    1.593142151342267,
    1.6104903319492543,
    1.6280274218573478,
    1.645755478153965,
    1.6636765803267364,
    1.681792830507429,
    1.7001063537185235,
    1.718619298122478,
    1.7373338352737062,
    1.7562521603732995,
    1.7753764925265212,
    1.7947090750031072,
    1.8142521755003989,
    1.8340080864093424,
    1.8539791250833855,
    1.8741676341103,
    1.8945759815869656,
    1.9152065613971474,
    1.9360617934922943,
    1.9571441241754002,
    1.978456026387951,
];

/// Rounds to nearest when added to a double of magnitude below 2^51.
const SHIFTER: f64 = 6_755_399_441_055_744.0;
const INV_LN2_64: f64 = 64.0 * core::f64::consts::LOG2_E;
// ln 2 / 64 split so that `k · LN2_HI` is exact for the k that occur.
const LN2_HI: f64 = 0.693_147_180_369_123_8 / 64.0;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10 / 64.0;

/// `e^x` for `x ≤ 0` to within a few ulp; arguments below −708 give 0.
#[inline(always)]
pub(crate) fn exp_nonpositive(x: f64) -> f64 {
    if x < -708.0 {
        return 0.0;
    }
    let kf = x * INV_LN2_64 + SHIFTER;
    let bits = kf.to_bits();
    let k = kf - SHIFTER;
    let r = x - k * LN2_HI - k * LN2_LO;
    let r2 = r * r;
    let p = 1.0
        + r
        + r2 * (0.5 + r * (1.0 / 6.0) + r2 * (1.0 / 24.0 + r * (1.0 / 120.0) + r2 * (1.0 / 720.0)));
    let frac = POW2_FRAC[(bits & 63) as usize];
    let exponent = (((bits as i64) >> 6) as u64).wrapping_add(1023) & 0x7ff;
    p * frac * f64::from_bits(exponent << 52)
}
