use mtpgd::beam::{BeamSection, SoilLayer, SoilLayerTable, WinklerModel};
use mtpgd::constitutive::{MaterialParams, ReturnMapOptions};
use mtpgd::fem2d::PlateMeshSpec;
use mtpgd::fem2d::{EdgeTraction, PlateModel};
use mtpgd::time::LoadShape;

pub fn plate_material() -> MaterialParams<f64> {
    MaterialParams { e: 205.0, nu: 0.3, sigma_p: 100.0, h_iso: 1140.0, h_kin: 21640.0, beta: 0.4 }
}

pub fn elastic_material() -> MaterialParams<f64> {
    MaterialParams { sigma_p: 1e12, ..plate_material() }
}

/// Plate with a unit upward traction on the top edge.
pub fn plate(n_side: usize, n_radial: usize, material: MaterialParams<f64>) -> PlateModel<f64> {
    let mesh = PlateMeshSpec { n_side, n_radial, ..Default::default() }.build::<f64>();
    let load = [EdgeTraction { set: "top".into(), traction: [0.0, 1.0] }];
    PlateModel::new(mesh, "bottom", material, ReturnMapOptions::default(), &load).unwrap()
}

pub fn plate_shape() -> LoadShape {
    LoadShape { points: vec![(0.0, 0.0), (0.25, 250.0), (0.75, -50.0), (1.0, 0.0)] }
}

pub fn pile_shape() -> LoadShape {
    LoadShape { points: vec![(0.0, 30.0), (0.5, 130.0), (1.0, 30.0)] }
}

fn layer(top: f64, bottom: f64, e: f64, sigma_p: f64, h_kin: f64) -> SoilLayer<f64> {
    SoilLayer { top, bottom, material: MaterialParams { e, nu: 0.0, sigma_p, h_iso: 0.0, h_kin, beta: 0.01 } }
}

pub fn monopile() -> WinklerModel<f64> {
    let section = BeamSection { e: 210e6, r_outer: 1.0, r_inner: 0.92, length: 15.0, n_elements: 45 };
    let layers = SoilLayerTable {
        layers: vec![
            layer(0.0, 5.0, 266.67, 2.0, 1466.7),
            layer(5.0, 10.0, 1000.0, 2.67, 2666.7),
            layer(10.0, 15.0, 1333.3, 3.33, 4666.7),
        ],
    };
    WinklerModel::new(section, layers).unwrap()
}
