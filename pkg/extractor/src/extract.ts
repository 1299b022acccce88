import * as tf from '@tensorflow/tfjs'
import { decodeImage, listImages } from './images'
import { featureHead, loadClassifier } from './model'
import { writeFeatureFile } from './rlfv'

export interface ExtractionJob {
  /** folder of .png files, optionally one subfolder per class */
  imageDir: string
  /** checkpoint directory holding model.json + weight shards */
  modelDir: string
  outputPath: string
  /** square resize applied to every image (default 32) */
  resize?: number
  batchSize?: number
  quiet?: boolean
}

export interface ExtractionReport {
  count: number
  featureDim: number
  logitDim: number
  labeled: boolean
  skipped: number
  classNames: string[]
}

function warn(quiet: boolean | undefined, message: string): void {
  if (!quiet) {
    console.warn(message)
  }
}

/**
 * Run the classifier over every readable image, in sorted path order,
 * and write penultimate features, logits, and labels (when the folder
 * is class-structured) as one RLFV file. Deterministic for fixed
 * weights and inputs; unreadable images are skipped with a warning, a
 * missing checkpoint is fatal.
 */
export async function runExtraction(
  job: ExtractionJob,
): Promise<ExtractionReport> {
  const resize = job.resize ?? 32
  const batchSize = job.batchSize ?? 64
  const classifier = await loadClassifier(job.modelDir)
  const { model, featureDim, logitDim } = featureHead(classifier)

  const listing = listImages(job.imageDir)
  const labeled = listing.classNames.length > 0
  let skipped = 0

  const rows: Float32Array[] = []
  const labels: number[] = []
  for (let start = 0; start < listing.entries.length; start += batchSize) {
    const batch = listing.entries.slice(start, start + batchSize)
    const tensors: tf.Tensor3D[] = []
    const batchLabels: number[] = []
    for (const entry of batch) {
      try {
        const { data, width, height } = decodeImage(entry.path)
        const img = tf.tensor3d(data, [height, width, 3])
        tensors.push(
          width === resize && height === resize
            ? img
            : tf.tidy(() => {
                const resized = tf.image.resizeBilinear(img, [resize, resize])
                img.dispose()
                return resized
              }),
        )
        batchLabels.push(entry.label ?? 0)
      } catch (err) {
        skipped += 1
        warn(job.quiet, `skipping unreadable image ${entry.path}: ${err}`)
      }
    }
    if (tensors.length === 0) {
      continue
    }
    const input = tf.stack(tensors)
    tensors.forEach(t => t.dispose())
    const [feats, logits] = model.predict(input) as tf.Tensor[]
    const featData = feats.dataSync() as Float32Array
    const logitData = logits.dataSync() as Float32Array
    input.dispose()
    feats.dispose()
    logits.dispose()
    for (let i = 0; i < batchLabels.length; i++) {
      const row = new Float32Array(featureDim + logitDim)
      row.set(featData.subarray(i * featureDim, (i + 1) * featureDim), 0)
      row.set(
        logitData.subarray(i * logitDim, (i + 1) * logitDim),
        featureDim,
      )
      rows.push(row)
      labels.push(batchLabels[i])
    }
  }

  if (rows.length === 0) {
    warn(job.quiet, `no readable images under ${job.imageDir}`)
  }
  const payload = new Float32Array(rows.length * (featureDim + logitDim))
  rows.forEach((row, i) => payload.set(row, i * row.length))
  writeFeatureFile(job.outputPath, {
    count: rows.length,
    featureDim,
    logitDim,
    labels: labeled ? Uint32Array.from(labels) : undefined,
    payload,
  })
  return {
    count: rows.length,
    featureDim,
    logitDim,
    labeled,
    skipped,
    classNames: listing.classNames,
  }
}
