use dyncp::greens::*;
use dyncp::materials::SurfaceModel;
use dyncp::potentials::*;

fn main() {
    let wp = 1.0 / 0.18;
    let gold = SurfaceModel::drude(wp, 3.892442e-3 * wp).unwrap();
    let d = DipoleSpec::isotropic(1.0).unwrap();
    let cfg = AtomSurfaceConfig::new(1.0, d, gold, 0.5).unwrap();
    let t0 = std::time::Instant::now();
    let engine = ContourEngine::new(&cfg).unwrap();
    println!("engine build: {:?}", t0.elapsed());
    for t in [0.4, 3.0, 5.0, 8.0, 15.0] {
        let t1 = std::time::Instant::now();
        let v = engine.u_dyn(t).unwrap();
        println!("t={t}: u_dyn = {:.6e}  ({:?})", v.value, t1.elapsed());
    }
    println!("referee: t=0.4 -> 2.69499e-2 ; t=3.0 -> 1.14931e-2");
}
