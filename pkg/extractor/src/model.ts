import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

// Minimal disk IO handlers so checkpoints load without the native
// tfjs-node bindings. A checkpoint directory holds model.json (topology
// plus a weights manifest) and the binary weight shards it references.

export function diskLoadHandler(dir: string): tf.io.IOHandler {
  return {
    async load() {
      const modelPath = path.join(dir, 'model.json')
      if (!fs.existsSync(modelPath)) {
        throw new Error(`checkpoint not found: ${modelPath}`)
      }
      const spec = JSON.parse(fs.readFileSync(modelPath, 'utf8'))
      const weightSpecs: tf.io.WeightsManifestEntry[] = []
      const shards: Buffer[] = []
      for (const group of spec.weightsManifest) {
        weightSpecs.push(...group.weights)
        for (const shard of group.paths) {
          shards.push(fs.readFileSync(path.join(dir, shard)))
        }
      }
      const blob = Buffer.concat(shards)
      return {
        modelTopology: spec.modelTopology,
        weightSpecs,
        weightData: blob.buffer.slice(
          blob.byteOffset,
          blob.byteOffset + blob.byteLength,
        ),
      }
    },
  }
}

export function diskSaveHandler(dir: string): tf.io.IOHandler {
  return {
    async save(artifacts: tf.io.ModelArtifacts) {
      fs.mkdirSync(dir, { recursive: true })
      const weightData = artifacts.weightData as ArrayBuffer
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData))
      const spec = {
        modelTopology: artifacts.modelTopology,
        weightsManifest: [
          { paths: ['weights.bin'], weights: artifacts.weightSpecs },
        ],
      }
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(spec))
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      }
    },
  }
}

export async function loadClassifier(dir: string): Promise<tf.LayersModel> {
  return tf.loadLayersModel(diskLoadHandler(dir))
}

export interface FeatureHead {
  model: tf.LayersModel
  featureDim: number
  logitDim: number
}

/**
 * Wrap a classifier so one forward pass yields the input of its final
 * dense layer (the penultimate representation) together with the
 * logits. The feature width follows whatever the checkpoint produces.
 */
export function featureHead(classifier: tf.LayersModel): FeatureHead {
  const denseLayers = classifier.layers.filter(
    layer => layer.getClassName() === 'Dense',
  )
  if (denseLayers.length === 0) {
    throw new Error('classifier has no dense head to split at')
  }
  const head = denseLayers[denseLayers.length - 1]
  const penultimate = head.input as tf.SymbolicTensor
  const logits = classifier.outputs[0]
  const model = tf.model({
    inputs: classifier.inputs,
    outputs: [penultimate, logits],
  })
  const featureDim = penultimate.shape[penultimate.shape.length - 1] as number
  const logitDim = logits.shape[logits.shape.length - 1] as number
  return { model, featureDim, logitDim }
}
